#include "cli.hpp"

#include "uatrust/assess/report.hpp"
#include "uatrust/client/config.hpp"
#include "uatrust/server/config.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <thread>

namespace uatrust::cli {

namespace {

using assess::ReportFormat;
using attacks::AttackResult;

struct Globals {
    std::string target;
    std::string listen;
    std::string profile;
    std::string config;
    std::string transcript_dir;
    bool show_secrets = false;
    std::string format = "human";
    std::string out;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code(AttackResult r)
{
    switch (r) {
    case AttackResult::Secure: return kExitSecure;
    case AttackResult::Vulnerable: return kExitVulnerable;
    case AttackResult::Inconclusive: return kExitError;
    }
    return kExitError;
}

class Context {
public:
    Context(const Globals& g, std::ostream& out, std::ostream& err, const std::atomic<bool>* interrupted)
        : g_(g), out_(out), err_(err), interrupted_(interrupted)
    {
    }

    ReportFormat format() const { return *assess::parse_report_format(g_.format); }
    const Globals& globals() const { return g_; }
    std::ostream& log() { return err_; }

    void emit(const std::string& text)
    {
        if (g_.out.empty()) {
            out_ << text;
            out_.flush();
            return;
        }
        std::ofstream f(g_.out, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + g_.out);
        f << text;
    }

    const std::string& require_target() const
    {
        if (g_.target.empty()) throw UsageError("--target is required");
        return g_.target;
    }

    void reject_config(const char* verb) const
    {
        if (!g_.config.empty()) throw UsageError(std::string("--config is not used by ") + verb);
    }

    std::optional<net::Endpoint> listen() const
    {
        if (g_.listen.empty()) return std::nullopt;
        return net::parse_host_port(g_.listen, 4840);
    }

    std::shared_ptr<net::Transcript> transcript(const std::string& label) const
    {
        return g_.transcript_dir.empty() ? nullptr : std::make_shared<net::Transcript>(label);
    }

    void save(attacks::AttackOutcome& o) const
    {
        if (!g_.transcript_dir.empty()) attacks::save_transcripts(o, g_.transcript_dir);
    }

    // Sleeps until the duration elapses (0: no limit), an interrupt arrives, or done() holds.
    void wait(double seconds, const std::function<bool()>& done = {}) const
    {
        const auto start = std::chrono::steady_clock::now();
        for (;;) {
            if (interrupted_ && interrupted_->load()) return;
            if (done && done()) return;
            if (seconds > 0 &&
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= seconds)
                return;
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    }

private:
    const Globals& g_;
    std::ostream& out_;
    std::ostream& err_;
    const std::atomic<bool>* interrupted_;
};

Bytes read_file(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    if (!f) throw UsageError("cannot read " + p.string());
    return Bytes(std::istreambuf_iterator<char>(f), {});
}

pki::Identity identity_from_dir(const std::string& dir, const std::string& cn, const std::string& uri)
{
    if (dir.empty()) return pki::generate_identity(cn, uri, 365);
    const std::filesystem::path d(dir);
    if (std::filesystem::exists(d / "cert.der")) return pki::load_identity(d / "cert.der", d / "key.pk8");
    auto id = pki::generate_identity(cn, uri, 365);
    std::filesystem::create_directories(d);
    pki::save_identity(id, d / "cert.der", d / "key.pk8");
    return id;
}

assess::Profile profile_or(const Globals& g, assess::Profile fallback)
{
    if (g.profile.empty()) return fallback;
    auto p = assess::parse_profile(g.profile);
    if (!p) throw UsageError("unknown profile '" + g.profile + "'");
    return *p;
}

assess::UserAuth auth_of(const std::string& name)
{
    auto a = assess::parse_user_auth(name);
    if (!a) throw UsageError("unknown auth '" + name + "'");
    return *a;
}

std::string render_scan(const attacks::ScanResult& r, ReportFormat format)
{
    if (format == ReportFormat::Machine) {
        pki::Json doc = {{"findings", pki::Json::array()}, {"servers", pki::Json::array()}};
        for (const auto& f : r.findings)
            doc["findings"].push_back({{"target", f.target}, {"status", attacks::to_string(f.status)}, {"detail", f.detail}});
        for (const auto& d : r.descriptors) {
            pki::Json eps = pki::Json::array();
            for (const auto& e : d.endpoints) {
                pki::Json tokens = pki::Json::array();
                for (const auto& t : e.user_identity_tokens) tokens.push_back(codec::to_string(t.token_type));
                eps.push_back({{"url", e.endpoint_url.value_or("")},
                               {"mode", codec::to_string(e.security_mode)},
                               {"policy", e.security_policy_uri.value_or("")},
                               {"tokens", std::move(tokens)}});
            }
            doc["servers"].push_back(
                {{"url", d.url()},
                 {"application_uri", d.application.application_uri.value_or("")},
                 {"certificate", d.server_certificate ? pki::to_hex(d.server_certificate->thumbprint) : ""},
                 {"endpoints", std::move(eps)}});
        }
        return doc.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "Targets\n";
    for (const auto& f : r.findings)
        os << "  " << f.target << "  " << attacks::to_string(f.status) << (f.detail.empty() ? "" : "  " + f.detail)
           << "\n";
    for (const auto& d : r.descriptors) {
        os << "Server " << d.url() << "  " << d.application.application_uri.value_or("") << "\n";
        if (d.server_certificate)
            os << "  certificate " << d.server_certificate->subject << "  " << pki::to_hex(d.server_certificate->thumbprint)
               << "\n";
        for (const auto& e : d.endpoints) {
            os << "  endpoint " << codec::to_string(e.security_mode) << " " << e.security_policy_uri.value_or("")
               << "  tokens";
            for (const auto& t : e.user_identity_tokens) os << " " << codec::to_string(t.token_type);
            os << "\n";
        }
    }
    return os.str();
}

struct ScanArgs {
    std::vector<std::string> targets;
    int timeout_ms = 3000;
};

int cmd_scan(Context& ctx, const ScanArgs& a)
{
    ctx.reject_config("scan");
    auto targets = a.targets;
    if (!ctx.globals().target.empty()) targets.insert(targets.begin(), ctx.globals().target);
    if (targets.empty()) throw UsageError("scan needs --target or positional targets");
    attacks::ScanOptions so;
    so.timeout = net::Millis(a.timeout_ms);
    so.transcript = ctx.transcript("scan");
    const auto r = attacks::scan(targets, so);
    if (so.transcript) {
        attacks::AttackOutcome holder;
        holder.captures.push_back(so.transcript);
        ctx.save(holder);
    }
    ctx.emit(render_scan(r, ctx.format()));
    return kExitSecure;
}

struct RogueServerArgs {
    double duration = 0;
    bool until_credential = false;
    double fabricate = 0.0;
    std::string identity_dir;
};

int cmd_rogue_server(Context& ctx, const RogueServerArgs& a)
{
    ctx.reject_config("rogue-server");
    const auto target = attacks::describe_target(ctx.require_target());
    attacks::RogueServerOptions ro;
    if (auto l = ctx.listen()) {
        ro.host = l->host;
        ro.port = l->port;
    }
    if (!a.identity_dir.empty()) {
        const std::filesystem::path d(a.identity_dir);
        ro.identity = pki::load_identity(d / "cert.der", d / "key.pk8");
    }
    ro.generator = attacks::default_generator(codec::Variant(a.fabricate));
    ro.transcript = ctx.transcript("rogue-server");
    auto rogue = attacks::RogueServer::start(target, std::move(ro));
    ctx.log() << "rogue server for " << target.url() << " listening on " << rogue->url() << "\n";
    ctx.wait(a.duration, [&] { return a.until_credential && !rogue->credentials().empty(); });
    rogue->stop();
    auto o = rogue->outcome();
    ctx.save(o);
    ctx.emit(assess::render_outcome(o, ctx.format(), ctx.globals().show_secrets));
    return exit_code(o.result);
}

struct RogueClientArgs {
    std::string user;
    std::string password;
    std::optional<double> write_value;
    bool all_endpoints = false;
    std::string clone_cert;
    int timeout_ms = 5000;
};

int cmd_rogue_client(Context& ctx, const RogueClientArgs& a)
{
    ctx.reject_config("rogue-client");
    const auto target = attacks::describe_target(ctx.require_target());
    attacks::RogueClientOptions ro;
    if (!a.user.empty()) ro.credentials = client::UserIdentity::user(a.user, a.password);
    if (a.write_value) ro.write_value = codec::Variant(*a.write_value);
    ro.stop_after_first_session = !a.all_endpoints;
    ro.timeout = net::Millis(a.timeout_ms);
    if (!a.clone_cert.empty())
        ro.identity = pki::clone_certificate(pki::CertificateRecord::parse(read_file(a.clone_cert)));
    auto o = attacks::rogue_client(target, ro);
    ctx.save(o);
    ctx.emit(assess::render_outcome(o, ctx.format(), ctx.globals().show_secrets));
    return exit_code(o.result);
}

struct MitmArgs {
    double duration = 0;
    std::vector<std::string> negate;
};

int cmd_mitm(Context& ctx, const MitmArgs& a)
{
    ctx.reject_config("mitm");
    const auto target = attacks::describe_target(ctx.require_target());
    attacks::MiddlepersonOptions mo;
    if (auto l = ctx.listen()) {
        mo.host = l->host;
        mo.port = l->port;
    }
    if (!a.negate.empty()) {
        std::vector<attacks::Manipulation> hooks;
        for (const auto& n : a.negate) hooks.push_back(attacks::negate_reads_of(codec::NodeId::parse(n)));
        mo.manipulate.on_read = [hooks](const codec::NodeId& id, codec::DataValue& v) {
            for (const auto& h : hooks) h.on_read(id, v);
        };
    }
    mo.transcript = ctx.transcript("middleperson-front");
    auto mp = attacks::Middleperson::start(target, std::move(mo));
    ctx.log() << "middleperson for " << target.url() << " listening on " << mp->url() << "\n";
    ctx.wait(a.duration);
    mp->stop();
    auto o = mp->outcome();
    ctx.save(o);
    ctx.emit(assess::render_outcome(o, ctx.format(), ctx.globals().show_secrets));
    return exit_code(o.result);
}

struct AssessArgs {
    bool matrix = false;
    std::string server_profile = "Secure";
    std::string client_profile = "Secure";
    std::string auth = "UserName";
    std::string attack = "RogueServer";
    std::uint64_t seed = 1;
    bool no_auto_accept = false;
    unsigned jobs = 1;
};

int cmd_assess(Context& ctx, const AssessArgs& a)
{
    std::vector<assess::ScenarioSpec> specs;
    if (!ctx.globals().config.empty()) {
        specs = assess::load_scenarios(ctx.globals().config);
    } else if (a.matrix) {
        specs = assess::full_matrix(auth_of(a.auth), a.seed, !a.no_auto_accept);
    } else {
        assess::ScenarioSpec s;
        auto sp = assess::parse_profile(a.server_profile);
        auto cp = assess::parse_profile(a.client_profile);
        auto k = assess::parse_attack(a.attack);
        if (!sp || !cp) throw UsageError("unknown profile");
        if (!k) throw UsageError("unknown attack '" + a.attack + "'");
        s.server_profile = *sp;
        s.client_profile = *cp;
        s.user_auth = auth_of(a.auth);
        s.attack = *k;
        s.seed = a.seed;
        s.auto_accept = !a.no_auto_accept;
        specs.push_back(s);
    }

    assess::HarnessOptions ho;
    ho.identities = std::make_shared<assess::IdentityCache>();
    if (!ctx.globals().transcript_dir.empty()) ho.transcript_dir = ctx.globals().transcript_dir;

    std::vector<std::optional<assess::AssessmentReport>> reports(specs.size());
    std::vector<std::string> errors(specs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i; (i = next++) < specs.size();) {
            try {
                reports[i] = assess::run_scenario(specs[i], ho);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < std::max(1u, a.jobs); ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<assess::AssessmentReport> done;
    bool failed = false;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (reports[i]) {
            done.push_back(std::move(*reports[i]));
        } else {
            failed = true;
            ctx.log() << "scenario " << specs[i].name() << " failed: " << errors[i] << "\n";
        }
    }
    ctx.emit(assess::render_reports(done, ctx.format(), ctx.globals().show_secrets));
    if (failed) return kExitError;
    bool inconclusive = false;
    for (const auto& r : done) {
        if (r.result() == AttackResult::Vulnerable) return kExitVulnerable;
        inconclusive = inconclusive || r.result() == AttackResult::Inconclusive;
    }
    return inconclusive ? kExitError : kExitSecure;
}

struct VictimArgs {
    std::string auth = "UserName";
    std::string user = "operator";
    std::string password = "secret";
    std::string identity_dir;
    std::vector<std::string> trust_certs;
    bool no_auto_accept = false;
    double duration = 0;
    double write_value = 50.0;
};

assess::HarnessOptions victim_options(const VictimArgs& a)
{
    assess::HarnessOptions o;
    o.user_name = a.user;
    o.password = a.password;
    return o;
}

void add_trusted(pki::TrustStore& store, const std::vector<std::string>& files)
{
    for (const auto& f : files) store.add_trusted(pki::CertificateRecord::parse(read_file(f)));
}

int cmd_serve_victim(Context& ctx, const VictimArgs& a)
{
    server::ServerConfig cfg;
    if (!ctx.globals().config.empty()) {
        cfg = server::load_server_config(ctx.globals().config);
        if (!ctx.globals().profile.empty())
            cfg.trust_policy = assess::trust_policy_for(profile_or(ctx.globals(), assess::Profile::Secure), !a.no_auto_accept);
    } else {
        const auto id = identity_from_dir(a.identity_dir, "Victim PLC", "urn:uatrust:victim:server");
        cfg = assess::victim_server_config(profile_or(ctx.globals(), assess::Profile::Secure), auth_of(a.auth),
                                           !a.no_auto_accept, id, victim_options(a));
    }
    add_trusted(*cfg.trust_store, a.trust_certs);
    if (auto l = ctx.listen()) {
        cfg.host = l->host;
        cfg.port = l->port;
    }
    const auto transcript = ctx.transcript("victim-server");
    cfg.transcript = transcript;
    auto srv = server::Server::start(std::move(cfg));
    ctx.log() << "victim server listening on " << srv->url() << "\n";
    ctx.wait(a.duration);
    srv->stop();
    const auto st = srv->stats();
    std::ostringstream os;
    if (ctx.format() == ReportFormat::Machine) {
        os << pki::Json{{"url", srv->url()},
                        {"connections", st.connections},
                        {"secure_channels_opened", st.secure_channels_opened},
                        {"channels_rejected", st.channels_rejected},
                        {"sessions_activated", st.sessions_activated},
                        {"activation_failures", st.activation_failures},
                        {"reads", st.reads},
                        {"writes", st.writes}}
                  .dump(2)
           << "\n";
    } else {
        os << "Victim server " << srv->url() << "\n"
           << "  connections " << st.connections << ", secure channels " << st.secure_channels_opened
           << ", rejected " << st.channels_rejected << "\n"
           << "  sessions activated " << st.sessions_activated << ", activation failures " << st.activation_failures
           << "\n"
           << "  reads " << st.reads << ", writes " << st.writes << "\n";
    }
    if (transcript) {
        attacks::AttackOutcome holder;
        holder.captures.push_back(transcript);
        ctx.save(holder);
    }
    ctx.emit(os.str());
    return kExitSecure;
}

int cmd_run_victim_client(Context& ctx, const VictimArgs& a)
{
    client::ClientConfig cfg;
    if (!ctx.globals().config.empty()) {
        cfg = client::load_client_config(ctx.globals().config);
        if (!ctx.globals().profile.empty())
            cfg.trust_policy = assess::trust_policy_for(profile_or(ctx.globals(), assess::Profile::Secure), !a.no_auto_accept);
    } else {
        const auto id = identity_from_dir(a.identity_dir, "Victim HMI", "urn:uatrust:victim:client");
        cfg = assess::victim_client_config(profile_or(ctx.globals(), assess::Profile::Secure), auth_of(a.auth),
                                           !a.no_auto_accept, id, victim_options(a));
    }
    add_trusted(*cfg.trust_store, a.trust_certs);
    assess::CycleOptions co;
    co.write_value = a.write_value;
    co.transcript = ctx.transcript("victim-client");
    const auto c = assess::drive_victim_client(ctx.require_target(), cfg, co);
    std::ostringstream os;
    const auto sensor = c.sensor ? c.sensor->to_string() : std::string();
    const auto write = c.write_status ? status_name(*c.write_status) : std::string();
    if (ctx.format() == ReportFormat::Machine)
        os << pki::Json{{"connected", c.connected}, {"error", c.error}, {"sensor", sensor}, {"write_status", write}}.dump(2)
           << "\n";
    else if (c.connected)
        os << "connected; sensor " << sensor << "; setpoint write " << write << "\n";
    else
        os << "connection failed: " << c.error << "\n";
    if (co.transcript) {
        attacks::AttackOutcome holder;
        holder.captures.push_back(co.transcript);
        ctx.save(holder);
    }
    ctx.emit(os.str());
    return c.connected ? kExitSecure : kExitError;
}

void victim_flags(CLI::App* sub, VictimArgs& a)
{
    sub->add_option("--auth", a.auth, "Anonymous or UserName");
    sub->add_option("--user", a.user, "user name");
    sub->add_option("--password", a.password, "password");
    sub->add_option("--identity-dir", a.identity_dir, "cert.der/key.pk8 directory; created when missing");
    sub->add_option("--trust-cert", a.trust_certs, "DER certificate to pre-provision as trusted");
    sub->add_flag("--no-auto-accept", a.no_auto_accept, "turn the P2 acceptance flag off");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* interrupted)
{
    CLI::App app{"OPC UA trust-configuration assessment toolkit", "uatrust"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(assess::kToolkitVersion));

    Globals g;
    app.add_option("--target", g.target, "target server, opc.tcp URL or host[:port]");
    app.add_option("--listen", g.listen, "listen address host:port (4840 when the port is omitted)");
    app.add_option("--profile", g.profile, "trust profile: Secure, P1, P2, P3");
    app.add_option("--config", g.config, "configuration file for the verb");
    app.add_option("--transcript-dir", g.transcript_dir, "write wire transcripts here");
    app.add_flag("--show-secrets", g.show_secrets, "print captured passwords");
    app.add_option("--format", g.format, "human or machine")->check(CLI::IsMember({"human", "machine"}));
    app.add_option("--out", g.out, "write the report to a file instead of stdout");

    ScanArgs scan_a;
    auto* scan = app.add_subcommand("scan", "discover OPC UA servers and their endpoints");
    scan->add_option("targets", scan_a.targets, "more targets");
    scan->add_option("--timeout-ms", scan_a.timeout_ms, "per-target timeout");

    RogueServerArgs rs_a;
    auto* rs = app.add_subcommand("rogue-server", "impersonate --target and capture credentials");
    rs->add_option("--duration", rs_a.duration, "seconds to run; 0 runs until interrupted");
    rs->add_flag("--until-credential", rs_a.until_credential, "stop at the first captured credential");
    rs->add_option("--fabricate", rs_a.fabricate, "value served for reads");
    rs->add_option("--identity-dir", rs_a.identity_dir, "use this certificate instead of a clone");

    RogueClientArgs rc_a;
    auto* rc = app.add_subcommand("rogue-client", "connect to --target with an unauthorized certificate");
    rc->add_option("--user", rc_a.user, "user name to try");
    rc->add_option("--password", rc_a.password, "password to try");
    rc->add_option("--write-value", rc_a.write_value, "probe value written to the setpoint");
    rc->add_flag("--all-endpoints", rc_a.all_endpoints, "keep going after the first session");
    rc->add_option("--clone-cert", rc_a.clone_cert, "DER certificate to imitate");
    rc->add_option("--timeout-ms", rc_a.timeout_ms, "per-step timeout");

    MitmArgs mm_a;
    auto* mm = app.add_subcommand("mitm", "relay between victims and --target");
    mm->add_option("--duration", mm_a.duration, "seconds to run; 0 runs until interrupted");
    mm->add_option("--negate", mm_a.negate, "node id whose reads are negated, e.g. ns=1;s=sensor");

    AssessArgs as_a;
    auto* as = app.add_subcommand("assess", "run harness scenarios");
    as->add_flag("--matrix", as_a.matrix, "every server profile x client profile x attack");
    as->add_option("--server-profile", as_a.server_profile);
    as->add_option("--client-profile", as_a.client_profile);
    as->add_option("--auth", as_a.auth, "Anonymous or UserName");
    as->add_option("--attack", as_a.attack, "rogue-server, rogue-client, mitm");
    as->add_option("--seed", as_a.seed);
    as->add_flag("--no-auto-accept", as_a.no_auto_accept, "turn the P2 acceptance flag off");
    as->add_option("--jobs", as_a.jobs, "scenarios run in parallel")->check(CLI::Range(1u, 64u));

    VictimArgs sv_a;
    auto* sv = app.add_subcommand("serve-victim", "run a victim server");
    victim_flags(sv, sv_a);
    sv->add_option("--duration", sv_a.duration, "seconds to run; 0 runs until interrupted");

    VictimArgs vc_a;
    auto* vc = app.add_subcommand("run-victim-client", "one connect-read-write cycle against --target");
    victim_flags(vc, vc_a);
    vc->add_option("--write-value", vc_a.write_value, "value written to the setpoint");

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitSecure : kExitError;
    }

    Context ctx(g, out, err, interrupted);
    try {
        if (*scan) return cmd_scan(ctx, scan_a);
        if (*rs) return cmd_rogue_server(ctx, rs_a);
        if (*rc) return cmd_rogue_client(ctx, rc_a);
        if (*mm) return cmd_mitm(ctx, mm_a);
        if (*as) return cmd_assess(ctx, as_a);
        if (*sv) return cmd_serve_victim(ctx, sv_a);
        if (*vc) return cmd_run_victim_client(ctx, vc_a);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitError;
}

}  // namespace uatrust::cli
