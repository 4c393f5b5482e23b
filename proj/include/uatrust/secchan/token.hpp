#pragma once

// UserName token secrets and the application signatures exchanged in CreateSession and
// ActivateSession.

#include "uatrust/pki/certificate.hpp"
#include "uatrust/secchan/suite.hpp"

namespace uatrust::secchan {

// Capacity of one OAEP(SHA-1) block minus the 4-byte length prefix and the nonce suffix.
std::size_t max_password_length(const pki::CertificateRecord& server_certificate, std::size_t nonce_length);

// Layout before encryption: u32 LE (len(password) + len(nonce)) || password || server_nonce.
// Under policy None the plaintext password bytes are returned unchanged.
// Errors: PasswordTooLong, NonceLengthMismatch.
Bytes encrypt_password_token(std::string_view password, const pki::CertificateRecord& server_certificate,
                             ByteView server_nonce, const SecurityPolicySuite& suite);

// Errors: DecryptFailed, LengthFieldInvalid, NonceMismatch.
std::string decrypt_password_token(ByteView token, const pki::PrivateKey& key, ByteView expected_server_nonce);

// RSA-PKCS#1 v1.5 SHA-256 over certificate || nonce.
Bytes sign_session(const pki::PrivateKey& key, ByteView peer_certificate, ByteView peer_nonce);
bool verify_session(const pki::CertificateRecord& signer, ByteView own_certificate, ByteView own_nonce,
                    ByteView signature);

}  // namespace uatrust::secchan
