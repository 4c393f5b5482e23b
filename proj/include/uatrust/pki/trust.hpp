#pragma once

// Trust policies and the trust store. The four policy kinds model the secure baseline and the
// three pitfall behaviors; every judgment is appended to a decision log for later attribution.

#include "uatrust/common/status.hpp"
#include "uatrust/pki/certificate.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <vector>

namespace uatrust::pki {

enum class TrustPolicyKind { Strict, AcceptAll, AcceptAllDefaultFlag, RejectedStore };

const char* to_string(TrustPolicyKind kind);
std::optional<TrustPolicyKind> parse_trust_policy_kind(std::string_view name);

struct TrustPolicy {
    TrustPolicyKind kind = TrustPolicyKind::Strict;
    bool auto_accept = true;  // consulted only for AcceptAllDefaultFlag

    static TrustPolicy strict() { return {TrustPolicyKind::Strict, false}; }
    static TrustPolicy accept_all() { return {TrustPolicyKind::AcceptAll, false}; }
    static TrustPolicy default_flag(bool auto_accept = true) { return {TrustPolicyKind::AcceptAllDefaultFlag, auto_accept}; }
    static TrustPolicy rejected_store() { return {TrustPolicyKind::RejectedStore, false}; }

    friend bool operator==(const TrustPolicy&, const TrustPolicy&) = default;
};

struct TrustVerdict {
    bool accepted = false;
    StatusCode reason = status::Good;

    static TrustVerdict accept() { return {true, status::Good}; }
    static TrustVerdict reject(StatusCode why) { return {false, why}; }
    explicit operator bool() const { return accepted; }
};

enum class TrustEvent { Validated, Promoted, Provisioned };

struct TrustDecision {
    TrustEvent event = TrustEvent::Validated;
    TrustPolicyKind policy = TrustPolicyKind::Strict;
    bool auto_accept = false;
    bool accepted = false;
    StatusCode reason = status::Good;
    Thumbprint thumbprint{};
    std::string common_name;
    std::string application_uri;
    // Validated events only: the certificate was trusted because of an earlier promotion.
    bool via_promotion = false;
};

// Thread-safe. All mutation goes through one mutex, so concurrent validations under
// RejectedStore serialize their appends.
class TrustStore {
public:
    TrustStore() = default;
    // Loads trusted/ and rejected/ under root (created if missing) and persists later changes there.
    explicit TrustStore(std::filesystem::path root);

    TrustStore(const TrustStore& other);
    TrustStore& operator=(const TrustStore& other);

    void add_trusted(const CertificateRecord& cert);
    bool is_trusted(const CertificateRecord& cert) const;
    bool is_rejected(const Thumbprint& t) const;
    std::vector<CertificateRecord> trusted() const;
    std::vector<CertificateRecord> rejected() const;

    // Records cert in the rejected list unless an identical DER is already there. Returns true
    // when an entry was added.
    bool add_rejected(const CertificateRecord& cert);

    // Errors: NotInRejectedList.
    void promote_rejected(const Thumbprint& t);

    void record(TrustDecision decision);
    std::vector<TrustDecision> decisions() const;
    bool was_promoted(const Thumbprint& t) const;

    const std::optional<std::filesystem::path>& persistence_path() const { return root_; }

private:
    void persist(const char* dir, const CertificateRecord& cert) const;
    void unpersist(const char* dir, const Thumbprint& t) const;

    mutable std::mutex mutex_;
    std::multimap<Thumbprint, CertificateRecord> trusted_;
    std::vector<CertificateRecord> rejected_;
    std::vector<Thumbprint> promoted_;
    std::vector<TrustDecision> log_;
    std::optional<std::filesystem::path> root_;
};

// Judges a peer certificate. Strict and RejectedStore also reject trusted certificates that are
// outside their validity window (BadCertificateTimeInvalid). Every call is logged in store.
TrustVerdict validate_peer(const CertificateRecord& peer, const TrustPolicy& policy, TrustStore& store,
                           TimePoint now = std::chrono::system_clock::now());

}  // namespace uatrust::pki
