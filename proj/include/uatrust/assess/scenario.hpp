#pragma once

// Scenario harness: boots a victim server and client on loopback with planted trust
// profiles, runs one attack against them, drives the victim client through a
// discover-connect-read-write cycle and classifies what happened.

#include "uatrust/attacks/middleperson.hpp"
#include "uatrust/attacks/rogue_client.hpp"

#include <optional>
#include <string_view>

namespace uatrust::assess {

inline constexpr const char* kToolkitVersion = "1.0.0";

enum class Profile { Secure, P1_MissingTrustlist, P2_DefaultAcceptAll, P3_RejectedStorePromotion };
enum class UserAuth { Anonymous, UserName };

// None, or the three trust pitfall classes.
enum class PitfallClass { None, MissingTrustlist, TrustlistDisabledByDefault, CertificateExchangeOverSecureChannel };

const char* to_string(Profile p);
const char* to_string(UserAuth a);
const char* to_string(PitfallClass c);
const char* roman(PitfallClass c);  // "i", "ii", "iii", or "" for None

// Case-insensitive; accepts the enum names, "secure"/"p1"/"p2"/"p3" and the trust profile aliases.
std::optional<Profile> parse_profile(std::string_view name);
std::optional<UserAuth> parse_user_auth(std::string_view name);
std::optional<attacks::AttackKind> parse_attack(std::string_view name);

pki::TrustPolicy trust_policy_for(Profile profile, bool auto_accept);
// The class a profile plants; Secure and P2 with the flag off plant nothing.
PitfallClass planted_class(Profile profile, bool auto_accept);

struct ScenarioSpec {
    Profile server_profile = Profile::Secure;
    Profile client_profile = Profile::Secure;
    UserAuth user_auth = UserAuth::UserName;
    attacks::AttackKind attack = attacks::AttackKind::RogueServer;
    std::uint64_t seed = 1;
    bool auto_accept = true;  // the flag of both P2 applications

    std::string name() const;  // e.g. "P1-P2-UserName-Middleperson-s1"
    friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

// Every server profile x client profile x attack, in a fixed order.
std::vector<ScenarioSpec> full_matrix(UserAuth auth = UserAuth::UserName, std::uint64_t seed = 1, bool auto_accept = true);

struct Finding {
    attacks::Side side = attacks::Side::Server;
    PitfallClass pitfall = PitfallClass::None;
    std::string reason;
};

struct VictimCycle {
    bool connected = false;
    std::string error;  // empty on success
    std::optional<codec::Variant> sensor;
    std::optional<StatusCode> write_status;
};

struct VictimObservations {
    std::vector<VictimCycle> cycles;
    std::optional<codec::Variant> server_sensor;  // the real server's stored values after the run
    std::optional<codec::Variant> server_setpoint;
    codec::Variant written_setpoint;  // what the victim client tried to write
};

struct AssessmentReport {
    ScenarioSpec scenario;
    std::vector<attacks::AttackOutcome> outcomes;
    PitfallClass pitfall_class = PitfallClass::None;
    std::vector<Finding> findings;
    std::vector<attacks::CapturedCredential> credentials;
    std::vector<std::string> transcripts;
    std::string toolkit_version = kToolkitVersion;
    std::vector<std::string> notes;
    VictimObservations victim;

    attacks::AttackResult result() const;  // Vulnerable, else Inconclusive, else Secure
};

class HarnessTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Keys are the slow part of a run; a shared cache lets repeated runs reuse victim identities.
class IdentityCache {
public:
    const pki::Identity& get(const std::string& common_name, const std::string& application_uri);

private:
    std::mutex mutex_;
    std::map<std::string, pki::Identity> identities_;
};

struct HarnessOptions {
    std::optional<std::filesystem::path> transcript_dir;
    net::Millis phase_timeout{30000};
    // Applied by the middleperson; default negates the sensor.
    std::optional<attacks::Manipulation> manipulation;
    std::shared_ptr<IdentityCache> identities;  // fresh victim identities per run when null
    std::string user_name = "operator";
    std::string password = "secret";
    net::Millis io_timeout{5000};
};

// The victim applications a scenario boots. The server offers Sign and SignAndEncrypt
// Basic256Sha256 endpoints, UserName always and Anonymous only under UserAuth::Anonymous, and
// listens on an ephemeral loopback port. Neither store is provisioned here.
server::ServerConfig victim_server_config(Profile profile, UserAuth auth, bool auto_accept, const pki::Identity& identity,
                                          const HarnessOptions& options = {});
client::ClientConfig victim_client_config(Profile profile, UserAuth auth, bool auto_accept, const pki::Identity& identity,
                                          const HarnessOptions& options = {});

struct CycleOptions {
    double write_value = 50.0;
    std::shared_ptr<net::Transcript> transcript;
};

// One discover-connect-read-write-close pass against url. Client failures end up in error.
VictimCycle drive_victim_client(const std::string& url, client::ClientConfig config, const CycleOptions& options);

// Errors: HarnessTimeout when a phase exceeds options.phase_timeout; net::NetError(BindFailed).
AssessmentReport run_scenario(const ScenarioSpec& spec, const HarnessOptions& options = {});

// Per-side attribution from the trust evidence in the outcomes. Outcomes that are Vulnerable
// without trust evidence fall back to the class planted on the side the evidence concerns.
std::vector<Finding> attribute(const std::vector<attacks::AttackOutcome>& outcomes, const ScenarioSpec& spec);
// The first finding's class in evidence order, None when no outcome is Vulnerable.
PitfallClass classify(const std::vector<attacks::AttackOutcome>& outcomes, const ScenarioSpec& spec);

// The look-alike review an operator performs on a rejected list: every rejected certificate
// whose subject and application URI match the expected peer is promoted. Returns them.
std::vector<pki::CertificateRecord> simulate_operator_promotion(pki::TrustStore& store,
                                                                const pki::CertificateRecord& expected_peer);

}  // namespace uatrust::assess
