#include "uatrust/secchan/suite.hpp"

#include "uatrust/secchan/crypto.hpp"

namespace uatrust::secchan {

const char* to_string(SecErrc code)
{
    switch (code) {
    case SecErrc::PolicyNone: return "PolicyNone";
    case SecErrc::PolicyUnsupported: return "PolicyUnsupported";
    case SecErrc::PlaintextTooLarge: return "PlaintextTooLarge";
    case SecErrc::TrustRejected: return "TrustRejected";
    case SecErrc::SignatureInvalid: return "SignatureInvalid";
    case SecErrc::DecryptFailed: return "DecryptFailed";
    case SecErrc::ThumbprintMismatch: return "ThumbprintMismatch";
    case SecErrc::NonceLengthMismatch: return "NonceLengthMismatch";
    case SecErrc::MacInvalid: return "MacInvalid";
    case SecErrc::PaddingInvalid: return "PaddingInvalid";
    case SecErrc::SequenceGap: return "SequenceGap";
    case SecErrc::ChannelMismatch: return "ChannelMismatch";
    case SecErrc::Malformed: return "Malformed";
    case SecErrc::PasswordTooLong: return "PasswordTooLong";
    case SecErrc::NonceMismatch: return "NonceMismatch";
    case SecErrc::LengthFieldInvalid: return "LengthFieldInvalid";
    }
    return "Unknown";
}

const SecurityPolicySuite& suite_none()
{
    static const SecurityPolicySuite s{policy_uri::None, true, 0, 0, 0, 0, 0, 1, {}, {}};
    return s;
}

const SecurityPolicySuite& suite_basic256sha256()
{
    static const SecurityPolicySuite s{policy_uri::Basic256Sha256, false, 32, 32, 32, 16, 32, 16,
                                       kRsaOaepUri, kRsaSha256Uri};
    return s;
}

bool is_deprecated_policy(std::string_view uri)
{
    return uri == policy_uri::Basic128Rsa15 || uri == policy_uri::Basic256;
}

bool is_known_policy(std::string_view uri)
{
    return uri == policy_uri::None || uri == policy_uri::Basic256Sha256 || is_deprecated_policy(uri) ||
           uri == policy_uri::Aes128Sha256RsaOaep || uri == policy_uri::Aes256Sha256RsaPss;
}

const SecurityPolicySuite& suite_for_uri(std::string_view uri)
{
    if (uri == policy_uri::None) return suite_none();
    if (uri == policy_uri::Basic256Sha256) return suite_basic256sha256();
    if (is_deprecated_policy(uri))
        throw SecError(SecErrc::PolicyUnsupported, "deprecated security policy refused: " + std::string(uri),
                       status::BadSecurityPolicyRejected);
    throw SecError(SecErrc::PolicyUnsupported, "unsupported security policy: " + std::string(uri),
                   status::BadSecurityPolicyRejected);
}

Bytes p_sha256(ByteView secret, ByteView seed, std::size_t length)
{
    // A(0) = seed, A(i) = HMAC(secret, A(i-1)); output = HMAC(secret, A(1) || seed) || ...
    Bytes out;
    out.reserve(length + crypto::kSha256Size);
    Bytes a(seed.begin(), seed.end());
    while (out.size() < length) {
        a = crypto::hmac_sha256(secret, a);
        Bytes block_input = a;
        append(block_input, seed);
        append(out, crypto::hmac_sha256(secret, block_input));
    }
    out.resize(length);
    return out;
}

namespace {

DirectionKeys split(const Bytes& material, const SecurityPolicySuite& suite)
{
    DirectionKeys k;
    auto it = material.begin();
    k.signing.assign(it, it + static_cast<std::ptrdiff_t>(suite.signing_key_length));
    it += static_cast<std::ptrdiff_t>(suite.signing_key_length);
    k.encryption.assign(it, it + static_cast<std::ptrdiff_t>(suite.encryption_key_length));
    it += static_cast<std::ptrdiff_t>(suite.encryption_key_length);
    k.iv.assign(it, it + static_cast<std::ptrdiff_t>(suite.iv_length));
    return k;
}

}  // namespace

ChannelKeys derive_keys(ByteView local_nonce, ByteView remote_nonce, const SecurityPolicySuite& suite)
{
    if (suite.none) throw SecError(SecErrc::PolicyNone, "no key derivation under policy None");
    if (local_nonce.size() != suite.nonce_length || remote_nonce.size() != suite.nonce_length)
        throw SecError(SecErrc::NonceLengthMismatch,
                       "nonce lengths " + std::to_string(local_nonce.size()) + "/" +
                           std::to_string(remote_nonce.size()) + ", suite requires " +
                           std::to_string(suite.nonce_length),
                       status::BadNonceInvalid);
    const std::size_t n = suite.derived_key_material();
    ChannelKeys keys;
    keys.local = split(p_sha256(remote_nonce, local_nonce, n), suite);
    keys.remote = split(p_sha256(local_nonce, remote_nonce, n), suite);
    return keys;
}

Bytes fresh_nonce(const SecurityPolicySuite& suite)
{
    return suite.none ? Bytes{} : random_bytes(suite.nonce_length);
}

}  // namespace uatrust::secchan
