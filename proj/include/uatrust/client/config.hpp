#pragma once

// Client configuration file (JSON), same sections as the server file where they overlap:
//
//   application               {"uri", "name"}
//   identity, trust           see pki/config.hpp
//   user                      {"name": "...", "password": "..."}; absent means anonymous
//   encrypt_token_under_none  bool (default true)
//   timeout_ms                int

#include "uatrust/client/client.hpp"
#include "uatrust/pki/config.hpp"

namespace uatrust::client {

// Errors: pki::ConfigError.
ClientConfig client_config_from_json(const pki::Json& doc, const std::filesystem::path& base_dir);
ClientConfig load_client_config(const std::filesystem::path& path);

}  // namespace uatrust::client
