#pragma once

// JSON configuration sections shared by the server and client config files.
//
//   "identity": {"certificate": "server.der", "key": "server.pk8"}
//   "identity": {"generate": {"common_name": "...", "application_uri": "...", "bits": 2048, "days": 365}}
//   "trust": {"profile": "Strict", "auto_accept": true, "store": "pki/", "trusted": ["peer.der"]}
//
// Relative paths resolve against the directory of the config file.

#include "uatrust/pki/trust.hpp"

#include <json.hpp>

namespace uatrust::pki {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Accepts the TrustPolicyKind names and the scenario profile names (Secure, P1_MissingTrustlist,
// P2_DefaultAcceptAll, P3_RejectedStorePromotion, or just P1/P2/P3), case-insensitively.
std::optional<TrustPolicy> parse_trust_profile(std::string_view name, bool auto_accept = true);

struct TrustSection {
    TrustPolicy policy = TrustPolicy::strict();
    std::shared_ptr<TrustStore> store = std::make_shared<TrustStore>();
};

TrustSection trust_from_json(const Json& section, const std::filesystem::path& base_dir);
std::optional<Identity> identity_from_json(const Json& section, const std::filesystem::path& base_dir);

std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& value);

// Reads and parses a config file. Errors: ConfigError with the file name and parser message.
Json read_json_file(const std::filesystem::path& path);

}  // namespace uatrust::pki
