#include "uatrust/server/config.hpp"

namespace uatrust::server {

namespace {

constexpr std::string_view kPolicyPrefix = "http://opcfoundation.org/UA/SecurityPolicy#";

template <class T>
T number(const pki::Json& v, const char* what)
{
    if (!v.is_number()) throw ServerError(std::string("node value for ") + what + " must be a number");
    return v.get<T>();
}

}  // namespace

std::string expand_policy_uri(const std::string& name)
{
    const std::string uri = name.find("://") == std::string::npos ? std::string(kPolicyPrefix) + name : name;
    if (!secchan::is_known_policy(uri)) throw ServerError("unknown security policy \"" + name + "\"");
    return uri;
}

MessageSecurityMode parse_security_mode(const std::string& name)
{
    for (auto m : {MessageSecurityMode::None, MessageSecurityMode::Sign, MessageSecurityMode::SignAndEncrypt})
        if (name == codec::to_string(m)) return m;
    throw ServerError("unknown security mode \"" + name + "\"");
}

UserTokenType parse_user_token_type(const std::string& name)
{
    for (auto t : {UserTokenType::Anonymous, UserTokenType::UserName, UserTokenType::Certificate})
        if (name == codec::to_string(t)) return t;
    throw ServerError("unknown user token type \"" + name + "\"");
}

codec::Variant variant_from_json(const std::string& type, const pki::Json& value)
{
    if (type == "Double") return codec::Variant(number<double>(value, "Double"));
    if (type == "Float") return codec::Variant(number<float>(value, "Float"));
    if (type == "Int32") return codec::Variant(number<std::int32_t>(value, "Int32"));
    if (type == "UInt32") return codec::Variant(number<std::uint32_t>(value, "UInt32"));
    if (type == "Int64") return codec::Variant(number<std::int64_t>(value, "Int64"));
    if (type == "Boolean") {
        if (!value.is_boolean()) throw ServerError("node value for Boolean must be true or false");
        return codec::Variant(value.get<bool>());
    }
    if (type == "String") {
        if (!value.is_string()) throw ServerError("node value for String must be a string");
        return codec::Variant(codec::UaString(value.get<std::string>()));
    }
    throw ServerError("unsupported node type \"" + type + "\"");
}

ServerConfig server_config_from_json(const pki::Json& doc, const std::filesystem::path& base_dir)
{
    if (!doc.is_object()) throw ServerError("server config must be a JSON object");
    ServerConfig cfg;
    try {
        if (doc.contains("application")) {
            const auto& a = doc.at("application");
            cfg.application.application_uri = a.value("uri", cfg.application.application_uri);
            cfg.application.product_uri = a.value("product_uri", cfg.application.product_uri);
            cfg.application.application_name = a.value("name", cfg.application.application_name);
        }
        cfg.identity = pki::identity_from_json(doc.value("identity", pki::Json()), base_dir);
        if (doc.contains("listen")) {
            const auto ep = net::parse_host_port(doc.at("listen").get<std::string>());
            cfg.host = ep.host;
            cfg.port = ep.port;
        }
        for (const auto& e : doc.value("endpoints", pki::Json::array())) {
            EndpointDescriptor d;
            d.endpoint_url = e.value("url", std::string());
            d.mode = parse_security_mode(e.value("mode", std::string("None")));
            d.security_policy_uri = expand_policy_uri(e.value("policy", std::string("None")));
            for (const auto& t : e.value("user_tokens", pki::Json::array())) {
                UserTokenSpec spec;
                spec.type = parse_user_token_type(t.value("type", std::string("Anonymous")));
                if (t.contains("policy")) spec.security_policy_uri = expand_policy_uri(t.at("policy").get<std::string>());
                spec.policy_id = t.value("policy_id", std::string());
                d.user_token_policies.push_back(std::move(spec));
            }
            cfg.endpoints.push_back(std::move(d));
        }
        auto trust = pki::trust_from_json(doc.value("trust", pki::Json()), base_dir);
        cfg.trust_policy = trust.policy;
        cfg.trust_store = trust.store;
        const pki::Json users = doc.value("users", pki::Json::object());
        for (const auto& [name, pw] : users.items())
            cfg.users[name] = pw.get<std::string>();
        cfg.anonymous_allowed = doc.value("anonymous_allowed", false);
        if (doc.contains("nodes")) {
            auto store = std::make_shared<NodeStore>();
            for (const auto& n : doc.at("nodes")) {
                NodeEntry entry;
                entry.value = variant_from_json(n.at("type").get<std::string>(), n.at("value"));
                entry.writable = n.value("writable", false);
                entry.display_name = n.value("name", std::string());
                store->set(codec::NodeId::parse(n.at("id").get<std::string>()), std::move(entry));
            }
            cfg.nodes = std::move(store);
        }
    } catch (const pki::Json::exception& e) {
        throw ServerError(std::string("server config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ServerError(std::string("server config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

ServerConfig load_server_config(const std::filesystem::path& path)
{
    return server_config_from_json(pki::read_json_file(path), path.parent_path());
}

}  // namespace uatrust::server
