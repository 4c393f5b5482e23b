#pragma once

// Reference P_SHA256 computed by OpenSSL's TLS1-PRF KDF (TLS 1.2 PRF with SHA-256 and an empty
// label), independent of the HMAC iteration in secchan.

#include "uatrust/common/bytes.hpp"

#include <openssl/core_names.h>
#include <openssl/kdf.h>
#include <openssl/params.h>

#include <stdexcept>

namespace uatrust::testsupport {

inline Bytes tls12_prf_sha256(ByteView secret, ByteView label_and_seed, std::size_t length)
{
    Bytes out(length);
    if (length == 0) return out;
    EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "TLS1-PRF", nullptr);
    if (!kdf) throw std::runtime_error("TLS1-PRF unavailable");
    EVP_KDF_CTX* ctx = EVP_KDF_CTX_new(kdf);
    EVP_KDF_free(kdf);
    char digest[] = "SHA256";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SECRET, const_cast<std::uint8_t*>(secret.data()),
                                          secret.size()),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SEED, const_cast<std::uint8_t*>(label_and_seed.data()),
                                          label_and_seed.size()),
        OSSL_PARAM_construct_end(),
    };
    const int ok = EVP_KDF_derive(ctx, out.data(), out.size(), params);
    EVP_KDF_CTX_free(ctx);
    if (ok != 1) throw std::runtime_error("TLS1-PRF derive failed");
    return out;
}

}  // namespace uatrust::testsupport
