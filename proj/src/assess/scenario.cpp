#include "uatrust/assess/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>

namespace uatrust::assess {

namespace pu = secchan::policy_uri;
using attacks::AttackKind;
using attacks::AttackOutcome;
using attacks::AttackResult;
using attacks::EvidenceKind;
using attacks::Side;
using codec::MessageSecurityMode;

const char* to_string(Profile p)
{
    switch (p) {
    case Profile::Secure: return "Secure";
    case Profile::P1_MissingTrustlist: return "P1_MissingTrustlist";
    case Profile::P2_DefaultAcceptAll: return "P2_DefaultAcceptAll";
    case Profile::P3_RejectedStorePromotion: return "P3_RejectedStorePromotion";
    }
    return "?";
}

const char* to_string(UserAuth a) { return a == UserAuth::Anonymous ? "Anonymous" : "UserName"; }

const char* to_string(PitfallClass c)
{
    switch (c) {
    case PitfallClass::None: return "None";
    case PitfallClass::MissingTrustlist: return "Missing Support for Trustlist";
    case PitfallClass::TrustlistDisabledByDefault: return "Trustlist disabled by default";
    case PitfallClass::CertificateExchangeOverSecureChannel:
        return "Use of Secure Channel primitives to perform certificate exchange";
    }
    return "?";
}

const char* roman(PitfallClass c)
{
    switch (c) {
    case PitfallClass::None: return "";
    case PitfallClass::MissingTrustlist: return "i";
    case PitfallClass::TrustlistDisabledByDefault: return "ii";
    case PitfallClass::CertificateExchangeOverSecureChannel: return "iii";
    }
    return "";
}

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Runs one harness phase and fails the scenario if it overran.
template <class F>
void phase(const char* name, net::Millis limit, F&& f)
{
    const auto start = std::chrono::steady_clock::now();
    f();
    const auto spent = std::chrono::duration_cast<net::Millis>(std::chrono::steady_clock::now() - start);
    if (spent > limit)
        throw HarnessTimeout(std::string("phase '") + name + "' took " + std::to_string(spent.count()) + " ms");
}

std::optional<PitfallClass> class_of(const attacks::Evidence& e)
{
    if (e.kind == EvidenceKind::CertificatePromoted) return PitfallClass::CertificateExchangeOverSecureChannel;
    if (e.kind != EvidenceKind::TrustAccepted) return std::nullopt;
    const auto field = [&](const char* k) {
        auto it = e.fields.find(k);
        return it == e.fields.end() ? std::string() : it->second;
    };
    if (field("via_promotion") == "true") return PitfallClass::CertificateExchangeOverSecureChannel;
    if (field("policy") == pki::to_string(pki::TrustPolicyKind::AcceptAll)) return PitfallClass::MissingTrustlist;
    if (field("policy") == pki::to_string(pki::TrustPolicyKind::AcceptAllDefaultFlag) && field("auto_accept") == "true")
        return PitfallClass::TrustlistDisabledByDefault;
    return std::nullopt;
}

bool is_trust_evidence(EvidenceKind k) { return k == EvidenceKind::TrustAccepted || k == EvidenceKind::CertificatePromoted; }

// Appends the victim's own trust log entries about attacker certificates.
void add_trust_trace(AttackOutcome& o, const pki::TrustStore& store, Side side)
{
    const std::set<pki::Thumbprint> attacker(o.attacker_certificates.begin(), o.attacker_certificates.end());
    for (const auto& d : store.decisions()) {
        if (!attacker.count(d.thumbprint)) continue;
        std::map<std::string, std::string> fields{{"thumbprint", pki::to_hex(d.thumbprint)},
                                                  {"common_name", d.common_name},
                                                  {"policy", pki::to_string(d.policy)}};
        if (d.event == pki::TrustEvent::Promoted) {
            o.add(EvidenceKind::CertificatePromoted, side,
                  "operator promoted the attacker's look-alike certificate from the rejected list", std::move(fields));
        } else if (d.event == pki::TrustEvent::Validated && d.accepted) {
            fields["auto_accept"] = d.auto_accept ? "true" : "false";
            fields["via_promotion"] = d.via_promotion ? "true" : "false";
            o.add(EvidenceKind::TrustAccepted, side,
                  std::string("victim ") + attacks::to_string(side) + " accepted an attacker certificate under " +
                      pki::to_string(d.policy),
                  std::move(fields));
        }
    }
}

void merge(AttackOutcome& into, AttackOutcome&& from)
{
    into.evidence.insert(into.evidence.end(), from.evidence.begin(), from.evidence.end());
    into.attempts.insert(into.attempts.end(), from.attempts.begin(), from.attempts.end());
    into.credentials.insert(into.credentials.end(), from.credentials.begin(), from.credentials.end());
    into.captures.insert(into.captures.end(), from.captures.begin(), from.captures.end());
    into.transcripts.insert(into.transcripts.end(), from.transcripts.begin(), from.transcripts.end());
    into.notes.insert(into.notes.end(), from.notes.begin(), from.notes.end());
    for (const auto& t : from.attacker_certificates)
        if (std::find(into.attacker_certificates.begin(), into.attacker_certificates.end(), t) ==
            into.attacker_certificates.end())
            into.attacker_certificates.push_back(t);
    if (from.result == AttackResult::Vulnerable || into.result == AttackResult::Vulnerable)
        into.result = AttackResult::Vulnerable;
    else if (from.result == AttackResult::Inconclusive || into.result == AttackResult::Inconclusive)
        into.result = AttackResult::Inconclusive;
}

}  // namespace

std::optional<Profile> parse_profile(std::string_view name)
{
    const std::string n = lower(name);
    if (n == "secure" || n == "strict") return Profile::Secure;
    if (n == "p1" || n == "p1_missingtrustlist" || n == "acceptall") return Profile::P1_MissingTrustlist;
    if (n == "p2" || n == "p2_defaultacceptall" || n == "acceptalldefaultflag") return Profile::P2_DefaultAcceptAll;
    if (n == "p3" || n == "p3_rejectedstorepromotion" || n == "rejectedstore") return Profile::P3_RejectedStorePromotion;
    return std::nullopt;
}

std::optional<UserAuth> parse_user_auth(std::string_view name)
{
    const std::string n = lower(name);
    if (n == "anonymous" || n == "anon") return UserAuth::Anonymous;
    if (n == "username" || n == "user") return UserAuth::UserName;
    return std::nullopt;
}

std::optional<AttackKind> parse_attack(std::string_view name)
{
    const std::string n = lower(name);
    if (n == "rogueserver" || n == "rogue-server") return AttackKind::RogueServer;
    if (n == "rogueclient" || n == "rogue-client") return AttackKind::RogueClient;
    if (n == "middleperson" || n == "mitm") return AttackKind::Middleperson;
    return std::nullopt;
}

pki::TrustPolicy trust_policy_for(Profile profile, bool auto_accept)
{
    switch (profile) {
    case Profile::Secure: return pki::TrustPolicy::strict();
    case Profile::P1_MissingTrustlist: return pki::TrustPolicy::accept_all();
    case Profile::P2_DefaultAcceptAll: return pki::TrustPolicy::default_flag(auto_accept);
    case Profile::P3_RejectedStorePromotion: return pki::TrustPolicy::rejected_store();
    }
    return pki::TrustPolicy::strict();
}

PitfallClass planted_class(Profile profile, bool auto_accept)
{
    switch (profile) {
    case Profile::Secure: return PitfallClass::None;
    case Profile::P1_MissingTrustlist: return PitfallClass::MissingTrustlist;
    case Profile::P2_DefaultAcceptAll: return auto_accept ? PitfallClass::TrustlistDisabledByDefault : PitfallClass::None;
    case Profile::P3_RejectedStorePromotion: return PitfallClass::CertificateExchangeOverSecureChannel;
    }
    return PitfallClass::None;
}

std::string ScenarioSpec::name() const
{
    const auto short_name = [](Profile p) {
        switch (p) {
        case Profile::Secure: return "Secure";
        case Profile::P1_MissingTrustlist: return "P1";
        case Profile::P2_DefaultAcceptAll: return "P2";
        case Profile::P3_RejectedStorePromotion: return "P3";
        }
        return "?";
    };
    std::string n = std::string(short_name(server_profile)) + "-" + short_name(client_profile) + "-" +
                    to_string(user_auth) + "-" + attacks::to_string(attack) + "-s" + std::to_string(seed);
    if (!auto_accept) n += "-noauto";
    return n;
}

std::vector<ScenarioSpec> full_matrix(UserAuth auth, std::uint64_t seed, bool auto_accept)
{
    const Profile profiles[] = {Profile::Secure, Profile::P1_MissingTrustlist, Profile::P2_DefaultAcceptAll,
                                Profile::P3_RejectedStorePromotion};
    const AttackKind kinds[] = {AttackKind::RogueServer, AttackKind::RogueClient, AttackKind::Middleperson};
    std::vector<ScenarioSpec> out;
    for (auto sp : profiles)
        for (auto cp : profiles)
            for (auto k : kinds) out.push_back({sp, cp, auth, k, seed, auto_accept});
    return out;
}

attacks::AttackResult AssessmentReport::result() const
{
    bool inconclusive = false;
    for (const auto& o : outcomes) {
        if (o.result == AttackResult::Vulnerable) return AttackResult::Vulnerable;
        inconclusive = inconclusive || o.result == AttackResult::Inconclusive;
    }
    return inconclusive ? AttackResult::Inconclusive : AttackResult::Secure;
}

const pki::Identity& IdentityCache::get(const std::string& common_name, const std::string& application_uri)
{
    std::lock_guard lock(mutex_);
    const std::string key = common_name + "\n" + application_uri;
    auto it = identities_.find(key);
    if (it == identities_.end())
        it = identities_.emplace(key, pki::generate_identity(common_name, application_uri, 365)).first;
    return it->second;
}

std::vector<pki::CertificateRecord> simulate_operator_promotion(pki::TrustStore& store,
                                                                const pki::CertificateRecord& expected_peer)
{
    std::vector<pki::CertificateRecord> promoted;
    for (const auto& r : store.rejected()) {
        if (r.subject != expected_peer.subject || r.application_uri != expected_peer.application_uri) continue;
        if (r.der == expected_peer.der) continue;
        store.promote_rejected(r.thumbprint);
        promoted.push_back(r);
    }
    return promoted;
}

std::vector<Finding> attribute(const std::vector<AttackOutcome>& outcomes, const ScenarioSpec& spec)
{
    std::vector<Finding> out;
    const auto seen = [&](Side s) {
        return std::any_of(out.begin(), out.end(), [&](const Finding& f) { return f.side == s; });
    };
    for (const auto& o : outcomes) {
        if (o.result != AttackResult::Vulnerable) continue;
        for (const auto& e : o.evidence) {
            if (seen(e.side)) continue;
            if (auto c = class_of(e)) out.push_back({e.side, *c, e.summary});
        }
        for (const auto& e : o.evidence) {
            if (is_trust_evidence(e.kind) || seen(e.side)) continue;
            const Profile p = e.side == Side::Server ? spec.server_profile : spec.client_profile;
            const PitfallClass c = planted_class(p, spec.auto_accept);
            if (c != PitfallClass::None)
                out.push_back({e.side, c, "no trust trace recorded; attributed to the planted profile"});
        }
    }
    return out;
}

PitfallClass classify(const std::vector<AttackOutcome>& outcomes, const ScenarioSpec& spec)
{
    const auto findings = attribute(outcomes, spec);
    return findings.empty() ? PitfallClass::None : findings.front().pitfall;
}

namespace {

struct Victims {
    std::unique_ptr<server::Server> server;
    std::shared_ptr<pki::TrustStore> server_store;
    std::shared_ptr<pki::TrustStore> client_store;
    const pki::Identity* server_identity = nullptr;
    const pki::Identity* client_identity = nullptr;
};

}  // namespace

server::ServerConfig victim_server_config(Profile profile, UserAuth auth, bool auto_accept, const pki::Identity& identity,
                                          const HarnessOptions& options)
{
    server::ServerConfig cfg;
    cfg.application = {"urn:uatrust:victim:server", "urn:uatrust:victim", "Victim PLC"};
    cfg.identity = identity;
    std::vector<server::UserTokenSpec> tokens;
    if (auth == UserAuth::Anonymous) tokens.push_back({codec::UserTokenType::Anonymous, {}, {}});
    tokens.push_back({codec::UserTokenType::UserName, {}, {}});
    cfg.endpoints = {{"", MessageSecurityMode::Sign, std::string(pu::Basic256Sha256), tokens},
                     {"", MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256Sha256), tokens}};
    cfg.trust_policy = trust_policy_for(profile, auto_accept);
    cfg.users = {{options.user_name, options.password}};
    cfg.anonymous_allowed = auth == UserAuth::Anonymous;
    cfg.host = "127.0.0.1";
    cfg.port = 0;
    cfg.io_timeout = options.io_timeout;
    return cfg;
}

client::ClientConfig victim_client_config(Profile profile, UserAuth auth, bool auto_accept, const pki::Identity& identity,
                                          const HarnessOptions& options)
{
    client::ClientConfig cfg;
    cfg.identity = identity;
    cfg.application_name = "Victim HMI";
    cfg.trust_policy = trust_policy_for(profile, auto_accept);
    cfg.user = auth == UserAuth::UserName ? client::UserIdentity::user(options.user_name, options.password)
                                          : client::UserIdentity::anonymous();
    cfg.dial.timeout = options.io_timeout;
    return cfg;
}

VictimCycle drive_victim_client(const std::string& url, client::ClientConfig config, const CycleOptions& options)
{
    VictimCycle c;
    if (options.transcript) config.dial.transcript = options.transcript;
    try {
        auto s = client::Session::connect_url(url, config);
        c.connected = true;
        c.sensor = s.read(server::nodes::sensor());
        c.write_status = s.write(server::nodes::setpoint(), codec::Variant(options.write_value));
        s.close();
    } catch (const client::ClientError& e) {
        c.error = std::string(client::to_string(e.code())) + " " + status_name(e.status());
    }
    return c;
}

AssessmentReport run_scenario(const ScenarioSpec& spec, const HarnessOptions& options)
{
    AssessmentReport rep;
    rep.scenario = spec;
    std::mt19937_64 rng(spec.seed);
    const double fake_value = std::round(std::uniform_real_distribution<double>(-100.0, 100.0)(rng) * 100.0) / 100.0;
    const double write_value = 40.0 + static_cast<double>(rng() % 200) / 10.0;
    rep.victim.written_setpoint = codec::Variant(write_value);

    auto ids = options.identities ? options.identities : std::make_shared<IdentityCache>();
    Victims v;
    v.server_identity = &ids->get("Victim PLC", "urn:uatrust:victim:server");
    v.client_identity = &ids->get("Victim HMI", "urn:uatrust:victim:client");
    v.server_store = std::make_shared<pki::TrustStore>();
    v.client_store = std::make_shared<pki::TrustStore>();
    // both applications were commissioned with their legitimate peer
    v.server_store->add_trusted(v.client_identity->certificate);
    v.client_store->add_trusted(v.server_identity->certificate);

    auto server_transcript = std::make_shared<net::Transcript>("victim-server");
    std::vector<std::shared_ptr<net::Transcript>> harness_captures{server_transcript};

    phase("victim server up", options.phase_timeout, [&] {
        auto cfg = victim_server_config(spec.server_profile, spec.user_auth, spec.auto_accept, *v.server_identity, options);
        cfg.trust_store = v.server_store;
        cfg.transcript = server_transcript;
        v.server = server::Server::start(std::move(cfg));
    });

    attacks::TargetDescriptor target;
    phase("discovery", options.phase_timeout, [&] {
        attacks::ScanOptions so;
        so.timeout = options.io_timeout;
        target = attacks::describe_target(v.server->url(), so);
    });

    std::unique_ptr<attacks::RogueServer> rogue;
    std::unique_ptr<attacks::Middleperson> mp;
    std::optional<std::uint16_t> redirect;
    AttackOutcome outcome;
    outcome.attack = spec.attack;
    outcome.result = AttackResult::Secure;

    const auto review = [&](bool after_attacker) {
        // an operator looks at rejected lists on P3 applications and promotes look-alikes
        std::size_t n = 0;
        if (spec.server_profile == Profile::P3_RejectedStorePromotion)
            n += simulate_operator_promotion(*v.server_store, v.client_identity->certificate).size();
        if (spec.client_profile == Profile::P3_RejectedStorePromotion && after_attacker)
            n += simulate_operator_promotion(*v.client_store, v.server_identity->certificate).size();
        return n;
    };

    phase("attacker up", options.phase_timeout, [&] {
        switch (spec.attack) {
        case AttackKind::RogueServer: {
            attacks::RogueServerOptions ro;
            ro.generator = attacks::default_generator(codec::Variant(fake_value));
            ro.transcript = std::make_shared<net::Transcript>("rogue-server");
            rogue = attacks::RogueServer::start(target, std::move(ro));
            redirect = rogue->port();
            break;
        }
        case AttackKind::Middleperson: {
            attacks::MiddlepersonOptions mo;
            mo.manipulate = options.manipulation ? *options.manipulation : attacks::negate_reads_of(server::nodes::sensor());
            mo.generator = attacks::default_generator(codec::Variant(fake_value));
            mo.transcript = std::make_shared<net::Transcript>("middleperson-front");
            mo.upstream_timeout = options.io_timeout;
            mp = attacks::Middleperson::start(target, std::move(mo));
            redirect = mp->port();
            break;
        }
        case AttackKind::RogueClient: {
            attacks::RogueClientOptions ro;
            // the legitimate client certificate travels in clear in every OPN, so it is known
            ro.identity = pki::clone_certificate(v.client_identity->certificate);
            ro.timeout = options.io_timeout;
            for (int pass = 0; pass < 2; ++pass) {
                merge(outcome, attacks::rogue_client(target, ro));
                if (outcome.result == AttackResult::Vulnerable || review(false) == 0) break;
            }
            break;
        }
        }
    });

    const auto drive = [&](int n) {
        auto cfg = victim_client_config(spec.client_profile, spec.user_auth, spec.auto_accept, *v.client_identity, options);
        cfg.trust_store = v.client_store;
        if (redirect) cfg.dial.dial_override = net::Endpoint{"127.0.0.1", *redirect, ""};
        CycleOptions co;
        co.write_value = write_value;
        co.transcript = std::make_shared<net::Transcript>("victim-client-" + std::to_string(n));
        harness_captures.push_back(co.transcript);
        return drive_victim_client(target.url(), std::move(cfg), co);
    };

    phase("victim client", options.phase_timeout, [&] {
        for (int n = 1; n <= 3; ++n) {
            rep.victim.cycles.push_back(drive(n));
            if (spec.attack == AttackKind::RogueClient || review(true) == 0) break;
        }
    });

    phase("teardown", options.phase_timeout, [&] {
        if (rogue) {
            rogue->stop();
            merge(outcome, rogue->outcome());
        }
        if (mp) {
            mp->stop();
            merge(outcome, mp->outcome());
        }
        v.server->stop();
    });

    if (outcome.result != AttackResult::Secure) {
        add_trust_trace(outcome, *v.client_store, Side::Client);
        add_trust_trace(outcome, *v.server_store, Side::Server);
    }
    if (spec.attack == AttackKind::Middleperson && spec.user_auth == UserAuth::Anonymous)
        rep.notes.push_back("Middleperson without UserName authentication runs as the forwarding-only variant");
    if (spec.attack == AttackKind::RogueServer)
        rep.notes.push_back("traffic interception is simulated by redirecting the victim client to the attacker");

    rep.victim.server_sensor = v.server->config().nodes->read(server::nodes::sensor()).value;
    rep.victim.server_setpoint = v.server->config().nodes->read(server::nodes::setpoint()).value;
    rep.credentials = outcome.credentials;

    if (options.transcript_dir) {
        const auto dir = *options.transcript_dir / spec.name();
        attacks::save_transcripts(outcome, dir);
        attacks::AttackOutcome harness;
        harness.captures = harness_captures;
        attacks::save_transcripts(harness, dir);
        rep.transcripts = outcome.transcripts;
        rep.transcripts.insert(rep.transcripts.end(), harness.transcripts.begin(), harness.transcripts.end());
    } else {
        rep.transcripts = outcome.transcripts;
        for (const auto& t : harness_captures) rep.transcripts.push_back(t->label());
    }
    rep.outcomes.push_back(std::move(outcome));
    rep.findings = attribute(rep.outcomes, spec);
    rep.pitfall_class = classify(rep.outcomes, spec);
    return rep;
}

}  // namespace uatrust::assess
