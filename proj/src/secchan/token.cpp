#include "uatrust/secchan/token.hpp"

#include "uatrust/secchan/crypto.hpp"

#include <algorithm>

namespace uatrust::secchan {

std::size_t max_password_length(const pki::CertificateRecord& server_certificate, std::size_t nonce_length)
{
    const std::size_t cap = crypto::oaep_capacity(server_certificate.public_key.get());
    return cap < 4 + nonce_length ? 0 : cap - 4 - nonce_length;
}

Bytes encrypt_password_token(std::string_view password, const pki::CertificateRecord& server_certificate,
                             ByteView server_nonce, const SecurityPolicySuite& suite)
{
    if (suite.none) return to_bytes(password);
    if (server_nonce.size() != suite.nonce_length)
        throw SecError(SecErrc::NonceLengthMismatch, "server nonce has " + std::to_string(server_nonce.size()) +
                                                         " bytes, suite requires " +
                                                         std::to_string(suite.nonce_length),
                       status::BadNonceInvalid);
    const std::size_t limit = max_password_length(server_certificate, server_nonce.size());
    if (password.size() > limit)
        throw SecError(SecErrc::PasswordTooLong, "password of " + std::to_string(password.size()) +
                                                     " bytes exceeds the " + std::to_string(limit) +
                                                     "-byte single-block limit",
                       status::BadIdentityTokenInvalid);

    const auto length = static_cast<std::uint32_t>(password.size() + server_nonce.size());
    Bytes plain{static_cast<std::uint8_t>(length), static_cast<std::uint8_t>(length >> 8),
                static_cast<std::uint8_t>(length >> 16), static_cast<std::uint8_t>(length >> 24)};
    append(plain, to_bytes(password));
    append(plain, server_nonce);
    return crypto::rsa_oaep_encrypt(server_certificate.public_key.get(), plain);
}

std::string decrypt_password_token(ByteView token, const pki::PrivateKey& key, ByteView expected_server_nonce)
{
    auto plain = crypto::rsa_oaep_decrypt(key.get(), token);
    if (!plain) throw SecError(SecErrc::DecryptFailed, "password token does not decrypt", status::BadIdentityTokenInvalid);
    if (plain->size() < 4) throw SecError(SecErrc::LengthFieldInvalid, "token shorter than its length field",
                                          status::BadIdentityTokenInvalid);
    const std::uint32_t length = static_cast<std::uint32_t>((*plain)[0]) | static_cast<std::uint32_t>((*plain)[1]) << 8 |
                                 static_cast<std::uint32_t>((*plain)[2]) << 16 |
                                 static_cast<std::uint32_t>((*plain)[3]) << 24;
    if (length != plain->size() - 4 || length < expected_server_nonce.size())
        throw SecError(SecErrc::LengthFieldInvalid, "token length field " + std::to_string(length) +
                                                        " inconsistent with " + std::to_string(plain->size() - 4) +
                                                        " payload bytes",
                       status::BadIdentityTokenInvalid);
    const auto nonce_begin = plain->end() - static_cast<std::ptrdiff_t>(expected_server_nonce.size());
    if (!std::equal(nonce_begin, plain->end(), expected_server_nonce.begin(), expected_server_nonce.end()))
        throw SecError(SecErrc::NonceMismatch, "token nonce does not match the session nonce", status::BadNonceInvalid);
    return std::string(plain->begin() + 4, nonce_begin);
}

Bytes sign_session(const pki::PrivateKey& key, ByteView peer_certificate, ByteView peer_nonce)
{
    Bytes data(peer_certificate.begin(), peer_certificate.end());
    append(data, peer_nonce);
    return crypto::rsa_sign_sha256(key.get(), data);
}

bool verify_session(const pki::CertificateRecord& signer, ByteView own_certificate, ByteView own_nonce,
                    ByteView signature)
{
    Bytes data(own_certificate.begin(), own_certificate.end());
    append(data, own_nonce);
    return crypto::rsa_verify_sha256(signer.public_key.get(), data, signature);
}

}  // namespace uatrust::secchan
