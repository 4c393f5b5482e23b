#include "uatrust/attacks/outcome.hpp"

#include <algorithm>

namespace uatrust::attacks {

const char* to_string(AttackKind kind)
{
    switch (kind) {
    case AttackKind::RogueServer: return "RogueServer";
    case AttackKind::RogueClient: return "RogueClient";
    case AttackKind::Middleperson: return "Middleperson";
    }
    return "?";
}

const char* to_string(AttackResult result)
{
    switch (result) {
    case AttackResult::Vulnerable: return "Vulnerable";
    case AttackResult::Secure: return "Secure";
    case AttackResult::Inconclusive: return "Inconclusive";
    }
    return "?";
}

const char* to_string(EvidenceKind kind)
{
    switch (kind) {
    case EvidenceKind::CredentialCaptured: return "CredentialCaptured";
    case EvidenceKind::UntrustedChannelAccepted: return "UntrustedChannelAccepted";
    case EvidenceKind::ValueRead: return "ValueRead";
    case EvidenceKind::ValueWritten: return "ValueWritten";
    case EvidenceKind::SessionReplayed: return "SessionReplayed";
    case EvidenceKind::ForwardedTraffic: return "ForwardedTraffic";
    case EvidenceKind::FabricatedData: return "FabricatedData";
    case EvidenceKind::ValueManipulated: return "ValueManipulated";
    case EvidenceKind::TrustAccepted: return "TrustAccepted";
    case EvidenceKind::CertificatePromoted: return "CertificatePromoted";
    }
    return "?";
}

const char* to_string(Side side) { return side == Side::Client ? "client" : "server"; }

const char* to_string(StepResult result)
{
    switch (result) {
    case StepResult::Succeeded: return "Succeeded";
    case StepResult::TrustRejected: return "TrustRejected";
    case StepResult::AuthRejected: return "AuthRejected";
    case StepResult::Failed: return "Failed";
    }
    return "?";
}

bool AttackOutcome::has(EvidenceKind kind) const { return count(kind) > 0; }

std::size_t AttackOutcome::count(EvidenceKind kind) const
{
    return static_cast<std::size_t>(
        std::count_if(evidence.begin(), evidence.end(), [&](const Evidence& e) { return e.kind == kind; }));
}

void AttackOutcome::add(EvidenceKind kind, Side side, std::string summary, std::map<std::string, std::string> fields)
{
    evidence.push_back({kind, side, std::move(summary), std::move(fields)});
}

namespace {

// Steps that only read public discovery data.
bool is_discovery(const std::string& step) { return step == "FindServers" || step == "GetEndpoints"; }

}  // namespace

std::vector<std::string> outcome_violations(const AttackOutcome& o)
{
    std::vector<std::string> out;
    if (o.result == AttackResult::Vulnerable && o.evidence.empty()) out.push_back("Vulnerable without evidence");
    if (o.result == AttackResult::Secure) {
        if (!o.evidence.empty()) out.push_back("Secure with evidence");
        for (const auto& a : o.attempts) {
            if (a.result == StepResult::Succeeded && !is_discovery(a.step))
                out.push_back("Secure but " + a.step + " succeeded on " + a.target);
            if (a.result == StepResult::Failed)
                out.push_back("Secure but " + a.step + " failed without a rejection: " + a.detail);
        }
    }
    return out;
}

void save_transcripts(AttackOutcome& outcome, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    outcome.transcripts.clear();
    std::map<std::string, int> used;
    for (const auto& t : outcome.captures) {
        std::string name = t->label().empty() ? "transcript" : t->label();
        if (const int n = used[name]++; n > 0) name += "-" + std::to_string(n);
        const auto path = dir / (name + ".uatr");
        t->save(path);
        outcome.transcripts.push_back(path.string());
    }
}

}  // namespace uatrust::attacks
