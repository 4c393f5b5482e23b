#pragma once

#include "uatrust/common/bytes.hpp"
#include "uatrust/common/status.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace uatrust::secchan {

enum class SecErrc {
    PolicyNone,
    PolicyUnsupported,
    PlaintextTooLarge,
    TrustRejected,
    SignatureInvalid,
    DecryptFailed,
    ThumbprintMismatch,
    NonceLengthMismatch,
    MacInvalid,
    PaddingInvalid,
    SequenceGap,
    ChannelMismatch,
    Malformed,
    PasswordTooLong,
    NonceMismatch,
    LengthFieldInvalid,
};

const char* to_string(SecErrc code);

class SecError : public std::runtime_error {
public:
    SecError(SecErrc code, const std::string& what, StatusCode status = status::BadSecurityChecksFailed)
        : std::runtime_error(what), code_(code), status_(status)
    {
    }
    SecErrc code() const noexcept { return code_; }
    // The status a peer should be told; for TrustRejected it is the trust verdict's reason.
    StatusCode status() const noexcept { return status_; }

private:
    SecErrc code_;
    StatusCode status_;
};

namespace policy_uri {
inline constexpr std::string_view None = "http://opcfoundation.org/UA/SecurityPolicy#None";
inline constexpr std::string_view Basic256Sha256 = "http://opcfoundation.org/UA/SecurityPolicy#Basic256Sha256";
inline constexpr std::string_view Basic128Rsa15 = "http://opcfoundation.org/UA/SecurityPolicy#Basic128Rsa15";
inline constexpr std::string_view Basic256 = "http://opcfoundation.org/UA/SecurityPolicy#Basic256";
inline constexpr std::string_view Aes128Sha256RsaOaep = "http://opcfoundation.org/UA/SecurityPolicy#Aes128_Sha256_RsaOaep";
inline constexpr std::string_view Aes256Sha256RsaPss = "http://opcfoundation.org/UA/SecurityPolicy#Aes256_Sha256_RsaPss";
}  // namespace policy_uri

inline constexpr std::string_view kRsaOaepUri = "http://www.w3.org/2001/04/xmlenc#rsa-oaep";
inline constexpr std::string_view kRsaSha256Uri = "http://www.w3.org/2001/04/xmldsig-more#rsa-sha256";

struct SecurityPolicySuite {
    std::string_view uri;
    bool none = true;  // every algorithm absent
    std::size_t nonce_length = 0;
    std::size_t signing_key_length = 0;
    std::size_t encryption_key_length = 0;
    std::size_t iv_length = 0;
    std::size_t symmetric_signature_size = 0;
    std::size_t symmetric_block_size = 1;
    std::string_view asymmetric_encryption_algorithm;
    std::string_view asymmetric_signature_algorithm;

    std::size_t derived_key_material() const { return signing_key_length + encryption_key_length + iv_length; }
};

const SecurityPolicySuite& suite_none();
const SecurityPolicySuite& suite_basic256sha256();

bool is_deprecated_policy(std::string_view uri);
bool is_known_policy(std::string_view uri);
// Errors: PolicyUnsupported for recognized-but-refused and unknown URIs.
const SecurityPolicySuite& suite_for_uri(std::string_view uri);

struct DirectionKeys {
    Bytes signing;
    Bytes encryption;
    Bytes iv;

    friend bool operator==(const DirectionKeys&, const DirectionKeys&) = default;
};

// local: protects what this side sends; remote: verifies what the peer sends.
struct ChannelKeys {
    DirectionKeys local;
    DirectionKeys remote;

    friend bool operator==(const ChannelKeys&, const ChannelKeys&) = default;
};

// P_SHA256(secret, seed) truncated to length bytes.
Bytes p_sha256(ByteView secret, ByteView seed, std::size_t length);

// A sender's keys are P_SHA256(secret = receiver's nonce, seed = sender's nonce), split as
// signing key, encryption key, IV. Errors: NonceLengthMismatch, PolicyNone.
ChannelKeys derive_keys(ByteView local_nonce, ByteView remote_nonce, const SecurityPolicySuite& suite);

Bytes fresh_nonce(const SecurityPolicySuite& suite);

}  // namespace uatrust::secchan
