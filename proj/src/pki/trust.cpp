#include "uatrust/pki/trust.hpp"

#include <algorithm>

namespace uatrust::pki {

const char* to_string(TrustPolicyKind kind)
{
    switch (kind) {
    case TrustPolicyKind::Strict: return "Strict";
    case TrustPolicyKind::AcceptAll: return "AcceptAll";
    case TrustPolicyKind::AcceptAllDefaultFlag: return "AcceptAllDefaultFlag";
    case TrustPolicyKind::RejectedStore: return "RejectedStore";
    }
    return "Unknown";
}

std::optional<TrustPolicyKind> parse_trust_policy_kind(std::string_view name)
{
    for (auto k : {TrustPolicyKind::Strict, TrustPolicyKind::AcceptAll, TrustPolicyKind::AcceptAllDefaultFlag,
                   TrustPolicyKind::RejectedStore})
        if (name == to_string(k)) return k;
    return std::nullopt;
}

TrustStore::TrustStore(std::filesystem::path root) : root_(std::move(root))
{
    namespace fs = std::filesystem;
    for (const char* dir : {"trusted", "rejected"}) {
        const fs::path d = *root_ / dir;
        fs::create_directories(d);
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(d))
            if (e.is_regular_file() && e.path().extension() == ".der") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            auto rec = CertificateRecord::parse(read_file(f));
            if (std::string_view(dir) == "trusted") trusted_.emplace(rec.thumbprint, std::move(rec));
            else rejected_.push_back(std::move(rec));
        }
    }
}

TrustStore::TrustStore(const TrustStore& other)
{
    std::lock_guard lock(other.mutex_);
    trusted_ = other.trusted_;
    rejected_ = other.rejected_;
    promoted_ = other.promoted_;
    log_ = other.log_;
    root_ = other.root_;
}

TrustStore& TrustStore::operator=(const TrustStore& other)
{
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    trusted_ = other.trusted_;
    rejected_ = other.rejected_;
    promoted_ = other.promoted_;
    log_ = other.log_;
    root_ = other.root_;
    return *this;
}

void TrustStore::persist(const char* dir, const CertificateRecord& cert) const
{
    if (root_) write_file(*root_ / dir / (to_hex(cert.thumbprint) + ".der"), cert.der);
}

void TrustStore::unpersist(const char* dir, const Thumbprint& t) const
{
    if (root_) std::filesystem::remove(*root_ / dir / (to_hex(t) + ".der"));
}

void TrustStore::add_trusted(const CertificateRecord& cert)
{
    std::lock_guard lock(mutex_);
    auto [lo, hi] = trusted_.equal_range(cert.thumbprint);
    for (auto it = lo; it != hi; ++it)
        if (it->second.der == cert.der) return;
    trusted_.emplace(cert.thumbprint, cert);
    persist("trusted", cert);
    log_.push_back({TrustEvent::Provisioned, TrustPolicyKind::Strict, false, true, status::Good, cert.thumbprint,
                    cert.subject_common_name, cert.application_uri, false});
}

bool TrustStore::is_trusted(const CertificateRecord& cert) const
{
    std::lock_guard lock(mutex_);
    auto [lo, hi] = trusted_.equal_range(cert.thumbprint);
    // Thumbprint equality alone is not enough; a SHA-1 collision must not grant trust.
    return std::any_of(lo, hi, [&](const auto& kv) { return kv.second.der == cert.der; });
}

bool TrustStore::is_rejected(const Thumbprint& t) const
{
    std::lock_guard lock(mutex_);
    return std::any_of(rejected_.begin(), rejected_.end(), [&](const auto& c) { return c.thumbprint == t; });
}

std::vector<CertificateRecord> TrustStore::trusted() const
{
    std::lock_guard lock(mutex_);
    std::vector<CertificateRecord> out;
    for (const auto& [_, c] : trusted_) out.push_back(c);
    return out;
}

std::vector<CertificateRecord> TrustStore::rejected() const
{
    std::lock_guard lock(mutex_);
    return rejected_;
}

bool TrustStore::add_rejected(const CertificateRecord& cert)
{
    std::lock_guard lock(mutex_);
    if (std::any_of(rejected_.begin(), rejected_.end(), [&](const auto& c) { return c.der == cert.der; }))
        return false;
    rejected_.push_back(cert);
    persist("rejected", cert);
    return true;
}

void TrustStore::promote_rejected(const Thumbprint& t)
{
    std::lock_guard lock(mutex_);
    auto it = std::find_if(rejected_.begin(), rejected_.end(), [&](const auto& c) { return c.thumbprint == t; });
    if (it == rejected_.end()) throw PkiError(PkiErrc::NotInRejectedList, to_hex(t) + " is not in the rejected list");
    CertificateRecord cert = std::move(*it);
    rejected_.erase(it);
    unpersist("rejected", t);
    persist("trusted", cert);
    log_.push_back({TrustEvent::Promoted, TrustPolicyKind::RejectedStore, false, true, status::Good, cert.thumbprint,
                    cert.subject_common_name, cert.application_uri, false});
    promoted_.push_back(t);
    trusted_.emplace(t, std::move(cert));
}

void TrustStore::record(TrustDecision decision)
{
    std::lock_guard lock(mutex_);
    log_.push_back(std::move(decision));
}

std::vector<TrustDecision> TrustStore::decisions() const
{
    std::lock_guard lock(mutex_);
    return log_;
}

bool TrustStore::was_promoted(const Thumbprint& t) const
{
    std::lock_guard lock(mutex_);
    return std::find(promoted_.begin(), promoted_.end(), t) != promoted_.end();
}

TrustVerdict validate_peer(const CertificateRecord& peer, const TrustPolicy& policy, TrustStore& store, TimePoint now)
{
    TrustVerdict verdict;
    bool lenient = false;
    switch (policy.kind) {
    case TrustPolicyKind::AcceptAll: lenient = true; break;
    case TrustPolicyKind::AcceptAllDefaultFlag: lenient = policy.auto_accept; break;
    case TrustPolicyKind::Strict:
    case TrustPolicyKind::RejectedStore: break;
    }

    if (lenient) {
        verdict = TrustVerdict::accept();
    } else if (store.is_trusted(peer)) {
        verdict = peer.validity.contains(now) ? TrustVerdict::accept()
                                              : TrustVerdict::reject(status::BadCertificateTimeInvalid);
    } else {
        verdict = TrustVerdict::reject(status::BadCertificateUntrusted);
        if (policy.kind == TrustPolicyKind::RejectedStore) store.add_rejected(peer);
    }

    store.record({TrustEvent::Validated, policy.kind, policy.auto_accept, verdict.accepted, verdict.reason,
                  peer.thumbprint, peer.subject_common_name, peer.application_uri,
                  !lenient && verdict.accepted && store.was_promoted(peer.thumbprint)});
    return verdict;
}

}  // namespace uatrust::pki
