#include "uatrust/pki/certificate.hpp"

#include <openssl/bio.h>
#include <openssl/bn.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <ctime>
#include <fstream>

namespace uatrust::pki {

namespace {

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using X509Ptr = std::unique_ptr<X509, Deleter<X509, X509_free>>;
using NamesPtr = std::unique_ptr<GENERAL_NAMES, Deleter<GENERAL_NAMES, GENERAL_NAMES_free>>;
using BioPtr = std::unique_ptr<BIO, Deleter<BIO, BIO_free_all>>;

std::string openssl_error()
{
    const unsigned long e = ERR_get_error();
    if (e == 0) return "unknown OpenSSL error";
    char buf[256];
    ERR_error_string_n(e, buf, sizeof buf);
    ERR_clear_error();
    return buf;
}

[[noreturn]] void fail(PkiErrc code, const std::string& what)
{
    throw PkiError(code, what + ": " + openssl_error());
}

std::shared_ptr<EVP_PKEY> share(EVP_PKEY* key)
{
    return std::shared_ptr<EVP_PKEY>(key, EVP_PKEY_free);
}

TimePoint to_time_point(const ASN1_TIME* t)
{
    std::tm tm{};
    if (!t || ASN1_TIME_to_tm(t, &tm) != 1) throw PkiError(PkiErrc::UnparseableCertificate, "bad validity time");
    return std::chrono::system_clock::from_time_t(timegm(&tm));
}

std::string asn1_to_utf8(const ASN1_STRING* s)
{
    unsigned char* out = nullptr;
    const int n = ASN1_STRING_to_UTF8(&out, s);
    if (n < 0) return {};
    std::string r(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
    OPENSSL_free(out);
    return r;
}

std::string common_name_of(const X509_NAME* name)
{
    const int idx = X509_NAME_get_index_by_NID(name, NID_commonName, -1);
    if (idx < 0) return {};
    return asn1_to_utf8(X509_NAME_ENTRY_get_data(X509_NAME_get_entry(name, idx)));
}

std::string one_line(const X509_NAME* name)
{
    BioPtr bio(BIO_new(BIO_s_mem()));
    X509_NAME_print_ex(bio.get(), name, 0, XN_FLAG_RFC2253);
    char* data = nullptr;
    const long n = BIO_get_mem_data(bio.get(), &data);
    return std::string(data, static_cast<std::size_t>(n));
}

std::string uri_of(const X509* cert)
{
    NamesPtr names(static_cast<GENERAL_NAMES*>(X509_get_ext_d2i(cert, NID_subject_alt_name, nullptr, nullptr)));
    if (!names) return {};
    for (int i = 0; i < sk_GENERAL_NAME_num(names.get()); ++i) {
        const GENERAL_NAME* g = sk_GENERAL_NAME_value(names.get(), i);
        if (g->type == GEN_URI) return asn1_to_utf8(g->d.uniformResourceIdentifier);
    }
    return {};
}

X509Ptr parse_x509(ByteView der)
{
    const unsigned char* p = der.data();
    X509Ptr x(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
    if (!x || p != der.data() + der.size()) {
        ERR_clear_error();
        throw PkiError(PkiErrc::UnparseableCertificate, "certificate is not valid DER X.509");
    }
    return x;
}

Bytes der_of(X509* x)
{
    const int n = i2d_X509(x, nullptr);
    if (n <= 0) fail(PkiErrc::InvalidParameter, "i2d_X509");
    Bytes out(static_cast<std::size_t>(n));
    unsigned char* p = out.data();
    i2d_X509(x, &p);
    return out;
}

void add_conf_ext(X509* x, int nid, const char* value)
{
    X509V3_CTX ctx;
    X509V3_set_ctx_nodb(&ctx);
    X509V3_set_ctx(&ctx, x, x, nullptr, nullptr, 0);
    X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value);
    if (!ext) fail(PkiErrc::InvalidParameter, "extension");
    X509_add_ext(x, ext, -1);
    X509_EXTENSION_free(ext);
}

void set_random_serial(X509* x)
{
    unsigned char raw[16];
    if (RAND_bytes(raw, sizeof raw) != 1) fail(PkiErrc::InvalidParameter, "RAND_bytes");
    raw[0] &= 0x7F;
    BIGNUM* bn = BN_bin2bn(raw, sizeof raw, nullptr);
    BN_to_ASN1_INTEGER(bn, X509_get_serialNumber(x));
    BN_free(bn);
}

EVP_PKEY* fresh_rsa(int bits)
{
    EVP_PKEY* key = EVP_RSA_gen(static_cast<unsigned>(bits));
    if (!key) fail(PkiErrc::KeyInvalid, "RSA key generation");
    return key;
}

Identity finish(X509* x, EVP_PKEY* key)
{
    add_conf_ext(x, NID_subject_key_identifier, "hash");
    if (X509_sign(x, key, EVP_sha256()) <= 0) fail(PkiErrc::InvalidParameter, "X509_sign");
    Identity id;
    id.key = PrivateKey(key);
    id.certificate = CertificateRecord::parse(der_of(x));
    return id;
}

}  // namespace

Thumbprint thumbprint(ByteView der)
{
    Thumbprint out{};
    unsigned int len = 0;
    EVP_Digest(der.data(), der.size(), out.data(), &len, EVP_sha1(), nullptr);
    return out;
}

std::string to_hex(const Thumbprint& t)
{
    return uatrust::to_hex(ByteView(t));
}

PrivateKey::PrivateKey(EVP_PKEY* adopted) : key_(share(adopted)) {}

PrivateKey PrivateKey::from_pkcs8(ByteView der)
{
    const unsigned char* p = der.data();
    PKCS8_PRIV_KEY_INFO* info = d2i_PKCS8_PRIV_KEY_INFO(nullptr, &p, static_cast<long>(der.size()));
    if (!info) fail(PkiErrc::KeyInvalid, "PKCS#8 decode");
    EVP_PKEY* key = EVP_PKCS82PKEY(info);
    PKCS8_PRIV_KEY_INFO_free(info);
    if (!key) fail(PkiErrc::KeyInvalid, "PKCS#8 key");
    if (EVP_PKEY_base_id(key) != EVP_PKEY_RSA) {
        EVP_PKEY_free(key);
        throw PkiError(PkiErrc::KeyInvalid, "private key is not RSA");
    }
    return PrivateKey(key);
}

Bytes PrivateKey::to_pkcs8() const
{
    if (!key_) throw PkiError(PkiErrc::KeyInvalid, "empty key");
    PKCS8_PRIV_KEY_INFO* info = EVP_PKEY2PKCS8(key_.get());
    if (!info) fail(PkiErrc::KeyInvalid, "PKCS#8 encode");
    const int n = i2d_PKCS8_PRIV_KEY_INFO(info, nullptr);
    Bytes out(static_cast<std::size_t>(n));
    unsigned char* p = out.data();
    i2d_PKCS8_PRIV_KEY_INFO(info, &p);
    PKCS8_PRIV_KEY_INFO_free(info);
    return out;
}

int PrivateKey::bits() const
{
    return key_ ? EVP_PKEY_get_bits(key_.get()) : 0;
}

CertificateRecord CertificateRecord::parse(ByteView der)
{
    X509Ptr x = parse_x509(der);
    CertificateRecord rec;
    rec.der.assign(der.begin(), der.end());
    rec.thumbprint = pki::thumbprint(der);
    rec.subject_common_name = common_name_of(X509_get_subject_name(x.get()));
    rec.subject = one_line(X509_get_subject_name(x.get()));
    rec.application_uri = uri_of(x.get());
    if (rec.application_uri.empty())
        throw PkiError(PkiErrc::UnparseableCertificate, "certificate has no subjectAltName URI");
    rec.validity = {to_time_point(X509_get0_notBefore(x.get())), to_time_point(X509_get0_notAfter(x.get()))};
    EVP_PKEY* key = X509_get_pubkey(x.get());
    if (!key || EVP_PKEY_base_id(key) != EVP_PKEY_RSA) {
        if (key) EVP_PKEY_free(key);
        ERR_clear_error();
        throw PkiError(PkiErrc::UnparseableCertificate, "certificate key is not RSA");
    }
    rec.public_key = share(key);
    return rec;
}

int CertificateRecord::key_bits() const
{
    return public_key ? EVP_PKEY_get_bits(public_key.get()) : 0;
}

Identity generate_identity(const std::string& common_name, const std::string& application_uri, int validity_days,
                           int key_bits)
{
    if (common_name.empty()) throw PkiError(PkiErrc::InvalidParameter, "empty common name");
    if (application_uri.empty()) throw PkiError(PkiErrc::InvalidParameter, "empty application URI");
    if (validity_days <= 0) throw PkiError(PkiErrc::InvalidParameter, "validity_days must be positive");
    if (key_bits != 2048 && key_bits != 4096)
        throw PkiError(PkiErrc::InvalidParameter, "key_bits must be 2048 or 4096, got " + std::to_string(key_bits));

    EVP_PKEY* key = fresh_rsa(key_bits);
    X509Ptr x(X509_new());
    X509_set_version(x.get(), 2);
    set_random_serial(x.get());
    X509_gmtime_adj(X509_getm_notBefore(x.get()), -60);
    X509_time_adj_ex(X509_getm_notAfter(x.get()), validity_days, 0, nullptr);

    X509_NAME* name = X509_get_subject_name(x.get());
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_UTF8, reinterpret_cast<const unsigned char*>(common_name.c_str()),
                               -1, -1, 0);
    X509_set_issuer_name(x.get(), name);
    X509_set_pubkey(x.get(), key);

    add_conf_ext(x.get(), NID_basic_constraints, "critical,CA:FALSE");
    add_conf_ext(x.get(), NID_key_usage,
                 "critical,digitalSignature,nonRepudiation,keyEncipherment,dataEncipherment");
    add_conf_ext(x.get(), NID_ext_key_usage, "serverAuth,clientAuth");

    // Built directly so URIs with commas or colons need no config-string escaping.
    NamesPtr names(GENERAL_NAMES_new());
    GENERAL_NAME* uri = GENERAL_NAME_new();
    ASN1_IA5STRING* ia5 = ASN1_IA5STRING_new();
    ASN1_STRING_set(ia5, application_uri.data(), static_cast<int>(application_uri.size()));
    GENERAL_NAME_set0_value(uri, GEN_URI, ia5);
    sk_GENERAL_NAME_push(names.get(), uri);
    X509_add1_ext_i2d(x.get(), NID_subject_alt_name, names.get(), 0, X509V3_ADD_DEFAULT);

    return finish(x.get(), key);
}

Identity clone_certificate(const CertificateRecord& target)
{
    X509Ptr t = parse_x509(target.der);
    if (uri_of(t.get()).empty())
        throw PkiError(PkiErrc::UnparseableCertificate, "target has no subjectAltName URI");
    EVP_PKEY* target_key = X509_get0_pubkey(t.get());
    if (!target_key || EVP_PKEY_base_id(target_key) != EVP_PKEY_RSA)
        throw PkiError(PkiErrc::UnparseableCertificate, "target key is not RSA");
    const int bits = EVP_PKEY_get_bits(target_key) > 2048 ? 4096 : 2048;

    EVP_PKEY* key = fresh_rsa(bits);
    X509Ptr x(X509_new());
    X509_set_version(x.get(), 2);
    X509_set_serialNumber(x.get(), const_cast<ASN1_INTEGER*>(X509_get0_serialNumber(t.get())));
    X509_set1_notBefore(x.get(), X509_get0_notBefore(t.get()));
    X509_set1_notAfter(x.get(), X509_get0_notAfter(t.get()));
    X509_set_subject_name(x.get(), X509_get_subject_name(t.get()));
    X509_set_issuer_name(x.get(), X509_get_subject_name(t.get()));
    X509_set_pubkey(x.get(), key);
    for (int i = 0; i < X509_get_ext_count(t.get()); ++i) {
        X509_EXTENSION* ext = X509_get_ext(t.get(), i);
        const int nid = OBJ_obj2nid(X509_EXTENSION_get_object(ext));
        if (nid == NID_subject_key_identifier || nid == NID_authority_key_identifier) continue;
        X509_add_ext(x.get(), ext, -1);
    }
    return finish(x.get(), key);
}

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PkiError(PkiErrc::Io, "cannot read " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, ByteView data)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw PkiError(PkiErrc::Io, "cannot write " + path.string());
}

void save_identity(const Identity& identity, const std::filesystem::path& cert_der, const std::filesystem::path& key_pk8)
{
    write_file(cert_der, identity.certificate.der);
    write_file(key_pk8, identity.key.to_pkcs8());
    std::filesystem::permissions(key_pk8, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
}

Identity load_identity(const std::filesystem::path& cert_der, const std::filesystem::path& key_pk8)
{
    Identity id;
    id.certificate = CertificateRecord::parse(read_file(cert_der));
    id.key = PrivateKey::from_pkcs8(read_file(key_pk8));
    if (EVP_PKEY_eq(id.key.get(), id.certificate.public_key.get()) != 1)
        throw PkiError(PkiErrc::KeyInvalid, "private key does not match " + cert_der.string());
    return id;
}

}  // namespace uatrust::pki
