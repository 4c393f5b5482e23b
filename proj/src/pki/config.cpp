#include "uatrust/pki/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace uatrust::pki {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::optional<TrustPolicy> parse_trust_profile(std::string_view name, bool auto_accept)
{
    const std::string n = lower(name);
    if (n == "strict" || n == "secure") return TrustPolicy::strict();
    if (n == "acceptall" || n == "p1" || n == "p1_missingtrustlist") return TrustPolicy::accept_all();
    if (n == "acceptalldefaultflag" || n == "p2" || n == "p2_defaultacceptall")
        return TrustPolicy::default_flag(auto_accept);
    if (n == "rejectedstore" || n == "p3" || n == "p3_rejectedstorepromotion") return TrustPolicy::rejected_store();
    return std::nullopt;
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& value)
{
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base_dir / p;
}

TrustSection trust_from_json(const Json& section, const std::filesystem::path& base_dir)
{
    TrustSection out;
    if (section.is_null()) return out;
    if (!section.is_object()) throw ConfigError("\"trust\" must be an object");
    const bool auto_accept = section.value("auto_accept", true);
    const std::string profile = section.value("profile", std::string("Strict"));
    auto policy = parse_trust_profile(profile, auto_accept);
    if (!policy) throw ConfigError("unknown trust profile \"" + profile + "\"");
    out.policy = *policy;
    if (section.contains("store"))
        out.store = std::make_shared<TrustStore>(resolve_path(base_dir, section.at("store").get<std::string>()));
    for (const auto& t : section.value("trusted", Json::array())) {
        const Bytes der = read_file(resolve_path(base_dir, t.get<std::string>()));
        out.store->add_trusted(CertificateRecord::parse(der));
    }
    return out;
}

std::optional<Identity> identity_from_json(const Json& section, const std::filesystem::path& base_dir)
{
    if (section.is_null()) return std::nullopt;
    if (!section.is_object()) throw ConfigError("\"identity\" must be an object");
    if (section.contains("generate")) {
        const auto& g = section.at("generate");
        return generate_identity(g.value("common_name", std::string("uatrust")),
                                 g.value("application_uri", std::string("urn:uatrust")), g.value("days", 365),
                                 g.value("bits", 2048));
    }
    if (!section.contains("certificate") || !section.contains("key"))
        throw ConfigError("\"identity\" needs \"certificate\" and \"key\" paths, or \"generate\"");
    return load_identity(resolve_path(base_dir, section.at("certificate").get<std::string>()),
                         resolve_path(base_dir, section.at("key").get<std::string>()));
}

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace uatrust::pki
