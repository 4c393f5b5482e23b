#pragma once

// Thin wrappers over the OpenSSL primitives the Basic256Sha256 suite uses.

#include "uatrust/common/bytes.hpp"

#include <openssl/types.h>

#include <optional>

namespace uatrust::secchan::crypto {

inline constexpr std::size_t kSha256Size = 32;
inline constexpr std::size_t kAesBlockSize = 16;
inline constexpr std::size_t kOaepSha1Overhead = 42;  // 2 * 20 + 2

std::size_t rsa_size_bytes(EVP_PKEY* key);
std::size_t oaep_capacity(EVP_PKEY* key);

Bytes hmac_sha256(ByteView key, ByteView data);
bool hmac_sha256_verify(ByteView key, ByteView data, ByteView mac);

// One OAEP(SHA-1) block. plaintext.size() must not exceed oaep_capacity(key).
Bytes rsa_oaep_encrypt(EVP_PKEY* public_key, ByteView plaintext);
std::optional<Bytes> rsa_oaep_decrypt(EVP_PKEY* private_key, ByteView ciphertext);

Bytes rsa_sign_sha256(EVP_PKEY* private_key, ByteView data);
bool rsa_verify_sha256(EVP_PKEY* public_key, ByteView data, ByteView signature);

// No padding; data.size() must be a multiple of 16.
Bytes aes256_cbc_encrypt(ByteView key, ByteView iv, ByteView data);
Bytes aes256_cbc_decrypt(ByteView key, ByteView iv, ByteView data);

}  // namespace uatrust::secchan::crypto
