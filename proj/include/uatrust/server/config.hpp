#pragma once

// Server configuration file (JSON). Keys:
//
//   application        {"uri", "product_uri", "name"}
//   identity           see pki/config.hpp
//   listen             "host:port" (default 127.0.0.1:4840)
//   endpoints          [{"url"?, "mode": "None|Sign|SignAndEncrypt", "policy": "None|Basic256Sha256|<uri>",
//                        "user_tokens": [{"type": "Anonymous|UserName|Certificate", "policy"?: ...}]}]
//   trust              see pki/config.hpp
//   users              {"name": "password", ...}
//   anonymous_allowed  bool
//   nodes              [{"id": "ns=1;s=x", "type": "Double|Float|Int32|UInt32|Int64|Boolean|String",
//                        "value": ..., "writable": bool, "name": "..."}]  (default: the three stock nodes)

#include "uatrust/pki/config.hpp"
#include "uatrust/server/server.hpp"

namespace uatrust::server {

// "Basic256Sha256" -> full policy URI; full URIs pass through. Throws ServerError on unknown names.
std::string expand_policy_uri(const std::string& name);
MessageSecurityMode parse_security_mode(const std::string& name);
UserTokenType parse_user_token_type(const std::string& name);
codec::Variant variant_from_json(const std::string& type, const pki::Json& value);

// Errors: ServerError or pki::ConfigError naming the offending key.
ServerConfig server_config_from_json(const pki::Json& doc, const std::filesystem::path& base_dir);
ServerConfig load_server_config(const std::filesystem::path& path);

}  // namespace uatrust::server
