#pragma once

// Application instance certificates: self-signed generation, look-alike cloning, parsing and
// SHA-1 thumbprints. Key material is held in OpenSSL EVP_PKEY objects.

#include "uatrust/common/bytes.hpp"

#include <openssl/types.h>

#include <array>
#include <chrono>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>

namespace uatrust::pki {

enum class PkiErrc { InvalidParameter, UnparseableCertificate, NotInRejectedList, KeyInvalid, Io };

class PkiError : public std::runtime_error {
public:
    PkiError(PkiErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    PkiErrc code() const noexcept { return code_; }

private:
    PkiErrc code_;
};

using Thumbprint = std::array<std::uint8_t, 20>;
using TimePoint = std::chrono::system_clock::time_point;

Thumbprint thumbprint(ByteView der);
std::string to_hex(const Thumbprint& t);

// Shared handle to an RSA key. Copies alias the same key.
class PrivateKey {
public:
    PrivateKey() = default;
    explicit PrivateKey(EVP_PKEY* adopted);

    static PrivateKey from_pkcs8(ByteView der);
    Bytes to_pkcs8() const;

    EVP_PKEY* get() const { return key_.get(); }
    explicit operator bool() const { return static_cast<bool>(key_); }
    int bits() const;

private:
    std::shared_ptr<EVP_PKEY> key_;
};

struct Validity {
    TimePoint not_before;
    TimePoint not_after;

    bool contains(TimePoint t) const { return not_before <= t && t <= not_after; }
    friend bool operator==(const Validity&, const Validity&) = default;
};

struct CertificateRecord {
    Bytes der;
    Thumbprint thumbprint{};
    std::string subject_common_name;
    std::string subject;  // one-line RFC 2253 form of the whole subject name
    std::string application_uri;
    Validity validity;
    std::shared_ptr<EVP_PKEY> public_key;

    // Errors: UnparseableCertificate for bad DER, a non-RSA key or a URI-less subjectAltName.
    static CertificateRecord parse(ByteView der);

    int key_bits() const;
    bool same_certificate(const CertificateRecord& other) const { return der == other.der; }
};

struct Identity {
    CertificateRecord certificate;
    PrivateKey key;
};

// key_bits must be 2048 or 4096; common_name, application_uri non-empty; validity_days > 0.
Identity generate_identity(const std::string& common_name, const std::string& application_uri, int validity_days,
                           int key_bits = 2048);

// Copies subject, subjectAltName, validity, serial and key-usage extensions from target onto a
// fresh self-signed certificate with a new key of the same size.
Identity clone_certificate(const CertificateRecord& target);

void save_identity(const Identity& identity, const std::filesystem::path& cert_der, const std::filesystem::path& key_pk8);
Identity load_identity(const std::filesystem::path& cert_der, const std::filesystem::path& key_pk8);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView data);

}  // namespace uatrust::pki
