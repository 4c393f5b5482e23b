#pragma once

// Results shared by the three attack engines. Evidence is what an attack achieved; attempts
// are every step it tried, successful or not, so a Secure verdict can be audited.

#include "uatrust/common/status.hpp"
#include "uatrust/net/transcript.hpp"
#include "uatrust/pki/certificate.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace uatrust::attacks {

enum class AttackKind { RogueServer, RogueClient, Middleperson };
enum class AttackResult { Vulnerable, Secure, Inconclusive };

enum class EvidenceKind {
    CredentialCaptured,
    UntrustedChannelAccepted,
    ValueRead,
    ValueWritten,
    SessionReplayed,
    ForwardedTraffic,
    FabricatedData,       // a victim client consumed values the attacker made up
    ValueManipulated,     // a relayed value was rewritten in flight
    TrustAccepted,        // victim trust log entry that admitted an attacker certificate
    CertificatePromoted,  // an attacker certificate moved from the rejected list to trusted
};

// The victim application an item of evidence concerns.
enum class Side { Client, Server };

const char* to_string(AttackKind kind);
const char* to_string(AttackResult result);
const char* to_string(EvidenceKind kind);
const char* to_string(Side side);

struct Evidence {
    EvidenceKind kind = EvidenceKind::ValueRead;
    Side side = Side::Server;
    std::string summary;
    std::map<std::string, std::string> fields;
};

enum class StepResult { Succeeded, TrustRejected, AuthRejected, Failed };
const char* to_string(StepResult result);

struct Attempt {
    std::string step;    // e.g. "OpenSecureChannel"
    std::string target;  // endpoint or node the step addressed
    StepResult result = StepResult::Failed;
    StatusCode status = status::Good;
    std::string detail;
};

struct CapturedCredential {
    std::string username;
    std::string password;
    std::string token_policy_uri;
    pki::TimePoint captured_at{};
    std::string victim_application_uri;  // empty when not observed
    bool was_encrypted = false;
};

struct AttackOutcome {
    AttackKind attack = AttackKind::RogueServer;
    AttackResult result = AttackResult::Secure;
    std::vector<Evidence> evidence;
    std::vector<Attempt> attempts;
    std::vector<CapturedCredential> credentials;
    std::vector<pki::Thumbprint> attacker_certificates;
    // Transcript labels, or file paths once saved.
    std::vector<std::string> transcripts;
    std::vector<std::shared_ptr<net::Transcript>> captures;
    std::vector<std::string> notes;

    bool has(EvidenceKind kind) const;
    std::size_t count(EvidenceKind kind) const;
    void add(EvidenceKind kind, Side side, std::string summary, std::map<std::string, std::string> fields = {});
};

// Violations of: Vulnerable implies evidence; Secure implies every attempt that did not
// succeed was a trust or auth rejection, and no success reached past the channel. Empty when
// the outcome is consistent.
std::vector<std::string> outcome_violations(const AttackOutcome& outcome);

// Writes every capture as <dir>/<label>.uatr and replaces the locators with the paths.
void save_transcripts(AttackOutcome& outcome, const std::filesystem::path& dir);

}  // namespace uatrust::attacks
