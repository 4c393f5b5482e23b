#include "uatrust/secchan/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rsa.h>

#include <memory>
#include <stdexcept>

namespace uatrust::secchan::crypto {

namespace {

struct PkeyCtxFree {
    void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
struct MdCtxFree {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;

[[noreturn]] void fail(const char* what)
{
    ERR_clear_error();
    throw std::runtime_error(std::string("OpenSSL failure: ") + what);
}

PkeyCtx oaep_ctx(EVP_PKEY* key, bool encrypt)
{
    PkeyCtx ctx(EVP_PKEY_CTX_new(key, nullptr));
    if (!ctx) fail("EVP_PKEY_CTX_new");
    if ((encrypt ? EVP_PKEY_encrypt_init(ctx.get()) : EVP_PKEY_decrypt_init(ctx.get())) <= 0 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) <= 0 ||
        EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha1()) <= 0 ||
        EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha1()) <= 0)
        fail("OAEP setup");
    return ctx;
}

Bytes aes(ByteView key, ByteView iv, ByteView data, bool encrypt)
{
    if (key.size() != 32 || iv.size() != kAesBlockSize) throw std::invalid_argument("AES-256-CBC key or IV length");
    if (data.size() % kAesBlockSize != 0) throw std::invalid_argument("AES-CBC input not block aligned");
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(EVP_CIPHER_CTX_new());
    if (!EVP_CipherInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, key.data(), iv.data(), encrypt ? 1 : 0))
        fail("EVP_CipherInit_ex");
    EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
    Bytes out(data.size());
    int n = 0;
    if (!EVP_CipherUpdate(ctx.get(), out.data(), &n, data.data(), static_cast<int>(data.size())))
        fail("EVP_CipherUpdate");
    int tail = 0;
    if (!EVP_CipherFinal_ex(ctx.get(), out.data() + n, &tail)) fail("EVP_CipherFinal_ex");
    return out;
}

}  // namespace

std::size_t rsa_size_bytes(EVP_PKEY* key)
{
    return static_cast<std::size_t>(EVP_PKEY_get_size(key));
}

std::size_t oaep_capacity(EVP_PKEY* key)
{
    return rsa_size_bytes(key) - kOaepSha1Overhead;
}

Bytes hmac_sha256(ByteView key, ByteView data)
{
    Bytes out(kSha256Size);
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len))
        fail("HMAC");
    return out;
}

bool hmac_sha256_verify(ByteView key, ByteView data, ByteView mac)
{
    if (mac.size() != kSha256Size) return false;
    const Bytes expected = hmac_sha256(key, data);
    return CRYPTO_memcmp(expected.data(), mac.data(), kSha256Size) == 0;
}

Bytes rsa_oaep_encrypt(EVP_PKEY* public_key, ByteView plaintext)
{
    if (plaintext.size() > oaep_capacity(public_key)) throw std::invalid_argument("OAEP plaintext too large");
    auto ctx = oaep_ctx(public_key, true);
    std::size_t len = 0;
    if (EVP_PKEY_encrypt(ctx.get(), nullptr, &len, plaintext.data(), plaintext.size()) <= 0) fail("OAEP size");
    Bytes out(len);
    if (EVP_PKEY_encrypt(ctx.get(), out.data(), &len, plaintext.data(), plaintext.size()) <= 0) fail("OAEP encrypt");
    out.resize(len);
    return out;
}

std::optional<Bytes> rsa_oaep_decrypt(EVP_PKEY* private_key, ByteView ciphertext)
{
    if (ciphertext.size() != rsa_size_bytes(private_key)) return std::nullopt;
    auto ctx = oaep_ctx(private_key, false);
    std::size_t len = 0;
    if (EVP_PKEY_decrypt(ctx.get(), nullptr, &len, ciphertext.data(), ciphertext.size()) <= 0) {
        ERR_clear_error();
        return std::nullopt;
    }
    Bytes out(len);
    if (EVP_PKEY_decrypt(ctx.get(), out.data(), &len, ciphertext.data(), ciphertext.size()) <= 0) {
        ERR_clear_error();
        return std::nullopt;
    }
    out.resize(len);
    return out;
}

Bytes rsa_sign_sha256(EVP_PKEY* private_key, ByteView data)
{
    std::unique_ptr<EVP_MD_CTX, MdCtxFree> ctx(EVP_MD_CTX_new());
    EVP_PKEY_CTX* pctx = nullptr;
    if (EVP_DigestSignInit(ctx.get(), &pctx, EVP_sha256(), nullptr, private_key) <= 0 ||
        EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PADDING) <= 0)
        fail("DigestSignInit");
    std::size_t len = 0;
    if (EVP_DigestSign(ctx.get(), nullptr, &len, data.data(), data.size()) <= 0) fail("DigestSign size");
    Bytes out(len);
    if (EVP_DigestSign(ctx.get(), out.data(), &len, data.data(), data.size()) <= 0) fail("DigestSign");
    out.resize(len);
    return out;
}

bool rsa_verify_sha256(EVP_PKEY* public_key, ByteView data, ByteView signature)
{
    std::unique_ptr<EVP_MD_CTX, MdCtxFree> ctx(EVP_MD_CTX_new());
    EVP_PKEY_CTX* pctx = nullptr;
    if (EVP_DigestVerifyInit(ctx.get(), &pctx, EVP_sha256(), nullptr, public_key) <= 0 ||
        EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PADDING) <= 0)
        fail("DigestVerifyInit");
    const int ok = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), data.data(), data.size());
    ERR_clear_error();
    return ok == 1;
}

Bytes aes256_cbc_encrypt(ByteView key, ByteView iv, ByteView data)
{
    return aes(key, iv, data, true);
}

Bytes aes256_cbc_decrypt(ByteView key, ByteView iv, ByteView data)
{
    return aes(key, iv, data, false);
}

}  // namespace uatrust::secchan::crypto
