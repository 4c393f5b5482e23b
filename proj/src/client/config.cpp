#include "uatrust/client/config.hpp"

namespace uatrust::client {

ClientConfig client_config_from_json(const pki::Json& doc, const std::filesystem::path& base_dir)
{
    if (!doc.is_object()) throw pki::ConfigError("client config must be a JSON object");
    ClientConfig cfg;
    try {
        if (doc.contains("application")) {
            const auto& a = doc.at("application");
            cfg.application_uri = a.value("uri", std::string());
            cfg.application_name = a.value("name", cfg.application_name);
        }
        cfg.identity = pki::identity_from_json(doc.value("identity", pki::Json()), base_dir);
        auto trust = pki::trust_from_json(doc.value("trust", pki::Json()), base_dir);
        cfg.trust_policy = trust.policy;
        cfg.trust_store = trust.store;
        if (doc.contains("user")) {
            const auto& u = doc.at("user");
            cfg.user = UserIdentity::user(u.at("name").get<std::string>(), u.value("password", std::string()));
        }
        cfg.encrypt_token_under_none = doc.value("encrypt_token_under_none", true);
        if (doc.contains("timeout_ms")) cfg.dial.timeout = net::Millis(doc.at("timeout_ms").get<int>());
    } catch (const pki::Json::exception& e) {
        throw pki::ConfigError(std::string("client config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw pki::ConfigError(std::string("client config: ") + e.what());
    }
    return cfg;
}

ClientConfig load_client_config(const std::filesystem::path& path)
{
    return client_config_from_json(pki::read_json_file(path), path.parent_path());
}

}  // namespace uatrust::client
