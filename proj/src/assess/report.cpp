#include "uatrust/assess/report.hpp"

#include <ctime>
#include <sstream>

namespace uatrust::assess {

namespace {

constexpr const char* kRedacted = "<redacted>";

std::string iso_time(pki::TimePoint t)
{
    const std::time_t secs = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string opt_variant(const std::optional<codec::Variant>& v) { return v ? v->to_string() : std::string("-"); }

pki::Json credential_json(const attacks::CapturedCredential& c, bool show_secrets)
{
    return {{"username", c.username},
            {"password", show_secrets ? c.password : kRedacted},
            {"token_policy_uri", c.token_policy_uri},
            {"captured_at", iso_time(c.captured_at)},
            {"victim_application_uri", c.victim_application_uri},
            {"was_encrypted", c.was_encrypted}};
}

pki::Json scenario_json(const ScenarioSpec& s)
{
    return {{"name", s.name()},
            {"server_profile", to_string(s.server_profile)},
            {"client_profile", to_string(s.client_profile)},
            {"user_auth", to_string(s.user_auth)},
            {"attack", attacks::to_string(s.attack)},
            {"seed", s.seed},
            {"auto_accept", s.auto_accept}};
}

void human_credentials(std::ostringstream& os, const std::vector<attacks::CapturedCredential>& creds, bool show,
                       const char* indent)
{
    for (const auto& c : creds) {
        os << indent << c.username << " / " << (show ? c.password : kRedacted) << "  policy "
           << c.token_policy_uri << (c.was_encrypted ? " (encrypted)" : " (plain)") << "  from "
           << (c.victim_application_uri.empty() ? "-" : c.victim_application_uri) << "  at "
           << iso_time(c.captured_at) << "\n";
    }
}

void human_outcome(std::ostringstream& os, const attacks::AttackOutcome& o, bool show)
{
    os << "Attack " << attacks::to_string(o.attack) << ": " << attacks::to_string(o.result) << "\n";
    if (!o.evidence.empty()) os << "  Evidence\n";
    for (const auto& e : o.evidence) {
        os << "    [" << attacks::to_string(e.kind) << " / " << attacks::to_string(e.side) << "] " << e.summary
           << "\n";
        for (const auto& [k, v] : e.fields) os << "        " << k << " = " << v << "\n";
    }
    if (!o.attempts.empty()) os << "  Attempts\n";
    for (const auto& a : o.attempts) {
        os << "    " << a.step << " " << a.target << " -> " << attacks::to_string(a.result);
        if (a.status != status::Good) os << " " << status_name(a.status);
        if (!a.detail.empty()) os << " (" << a.detail << ")";
        os << "\n";
    }
    if (!o.credentials.empty()) {
        os << "  Credentials\n";
        human_credentials(os, o.credentials, show, "    ");
    }
    for (const auto& n : o.notes) os << "  note: " << n << "\n";
}

std::string field_string(const pki::Json& doc, const char* key)
{
    const auto& v = doc.at(key);
    if (!v.is_string()) throw pki::ConfigError(std::string("scenario field '") + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

std::optional<ReportFormat> parse_report_format(std::string_view name)
{
    if (name == "human" || name == "text") return ReportFormat::Human;
    if (name == "machine" || name == "json") return ReportFormat::Machine;
    return std::nullopt;
}

pki::Json outcome_to_json(const attacks::AttackOutcome& o, bool show_secrets)
{
    pki::Json evidence = pki::Json::array();
    for (const auto& e : o.evidence) {
        pki::Json fields = pki::Json::object();
        for (const auto& [k, v] : e.fields) fields[k] = v;
        evidence.push_back({{"kind", attacks::to_string(e.kind)},
                            {"side", attacks::to_string(e.side)},
                            {"summary", e.summary},
                            {"fields", std::move(fields)}});
    }
    pki::Json attempts = pki::Json::array();
    for (const auto& a : o.attempts)
        attempts.push_back({{"step", a.step},
                            {"target", a.target},
                            {"result", attacks::to_string(a.result)},
                            {"status", status_name(a.status)},
                            {"detail", a.detail}});
    pki::Json creds = pki::Json::array();
    for (const auto& c : o.credentials) creds.push_back(credential_json(c, show_secrets));
    pki::Json certs = pki::Json::array();
    for (const auto& t : o.attacker_certificates) certs.push_back(pki::to_hex(t));
    return {{"attack", attacks::to_string(o.attack)},
            {"result", attacks::to_string(o.result)},
            {"evidence", std::move(evidence)},
            {"attempts", std::move(attempts)},
            {"credentials", std::move(creds)},
            {"attacker_certificates", std::move(certs)},
            {"transcripts", o.transcripts},
            {"notes", o.notes}};
}

pki::Json report_to_json(const AssessmentReport& r, bool show_secrets)
{
    pki::Json outcomes = pki::Json::array();
    for (const auto& o : r.outcomes) outcomes.push_back(outcome_to_json(o, show_secrets));
    pki::Json findings = pki::Json::array();
    for (const auto& f : r.findings)
        findings.push_back({{"side", attacks::to_string(f.side)},
                            {"class", roman(f.pitfall)},
                            {"name", to_string(f.pitfall)},
                            {"reason", f.reason}});
    pki::Json creds = pki::Json::array();
    for (const auto& c : r.credentials) creds.push_back(credential_json(c, show_secrets));
    pki::Json cycles = pki::Json::array();
    for (const auto& c : r.victim.cycles)
        cycles.push_back({{"connected", c.connected},
                          {"error", c.error},
                          {"sensor", c.sensor ? pki::Json(c.sensor->to_string()) : pki::Json()},
                          {"write_status", c.write_status ? pki::Json(status_name(*c.write_status)) : pki::Json()}});
    return {{"scenario", scenario_json(r.scenario)},
            {"result", attacks::to_string(r.result())},
            {"pitfall_class", {{"class", roman(r.pitfall_class)}, {"name", to_string(r.pitfall_class)}}},
            {"findings", std::move(findings)},
            {"outcomes", std::move(outcomes)},
            {"credentials", std::move(creds)},
            {"transcripts", r.transcripts},
            {"victim",
             {{"cycles", std::move(cycles)},
              {"written_setpoint", r.victim.written_setpoint.to_string()},
              {"server_sensor", opt_variant(r.victim.server_sensor)},
              {"server_setpoint", opt_variant(r.victim.server_setpoint)}}},
            {"notes", r.notes},
            {"toolkit_version", r.toolkit_version}};
}

std::string render_report(const AssessmentReport& r, ReportFormat format, bool show_secrets)
{
    if (format == ReportFormat::Machine) return report_to_json(r, show_secrets).dump(2) + "\n";
    std::ostringstream os;
    const auto& s = r.scenario;
    os << "Scenario " << s.name() << "\n"
       << "  server profile  " << to_string(s.server_profile) << "\n"
       << "  client profile  " << to_string(s.client_profile) << "\n"
       << "  user auth       " << to_string(s.user_auth) << "\n"
       << "  attack          " << attacks::to_string(s.attack) << "\n"
       << "  seed            " << s.seed << (s.auto_accept ? "" : "  (auto-accept off)") << "\n";
    os << "Result " << attacks::to_string(r.result()) << "\n";
    os << "Pitfall class ";
    if (r.pitfall_class == PitfallClass::None)
        os << "none\n";
    else
        os << roman(r.pitfall_class) << " (" << to_string(r.pitfall_class) << ")\n";
    for (const auto& f : r.findings)
        os << "  " << attacks::to_string(f.side) << " side: " << roman(f.pitfall) << "  " << f.reason << "\n";
    for (const auto& o : r.outcomes) human_outcome(os, o, show_secrets);
    if (!r.credentials.empty()) {
        os << "Captured credentials\n";
        human_credentials(os, r.credentials, show_secrets, "  ");
    }
    os << "Victim\n";
    int n = 0;
    for (const auto& c : r.victim.cycles) {
        os << "  cycle " << ++n << ": ";
        if (c.connected)
            os << "connected, read sensor " << opt_variant(c.sensor) << ", wrote setpoint "
               << r.victim.written_setpoint.to_string() << " -> "
               << (c.write_status ? status_name(*c.write_status) : std::string("-")) << "\n";
        else
            os << "failed: " << c.error << "\n";
    }
    os << "  real server: sensor " << opt_variant(r.victim.server_sensor) << ", setpoint "
       << opt_variant(r.victim.server_setpoint) << "\n";
    if (!r.transcripts.empty()) os << "Transcripts\n";
    for (const auto& t : r.transcripts) os << "  " << t << "\n";
    for (const auto& note : r.notes) os << "note: " << note << "\n";
    os << "uatrust " << r.toolkit_version << "\n";
    return os.str();
}

std::string render_reports(const std::vector<AssessmentReport>& reports, ReportFormat format, bool show_secrets)
{
    if (format == ReportFormat::Machine) {
        pki::Json all = pki::Json::array();
        for (const auto& r : reports) all.push_back(report_to_json(r, show_secrets));
        return all.dump(2) + "\n";
    }
    std::string out;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i) out += "\n";
        out += render_report(reports[i], format, show_secrets);
    }
    return out;
}

std::string render_outcome(const attacks::AttackOutcome& outcome, ReportFormat format, bool show_secrets)
{
    if (format == ReportFormat::Machine) return outcome_to_json(outcome, show_secrets).dump(2) + "\n";
    std::ostringstream os;
    human_outcome(os, outcome, show_secrets);
    for (const auto& t : outcome.transcripts) os << "  transcript " << t << "\n";
    return os.str();
}

ScenarioSpec scenario_from_json(const pki::Json& doc)
{
    if (!doc.is_object()) throw pki::ConfigError("scenario must be a JSON object");
    ScenarioSpec s;
    for (const auto& [key, value] : doc.items()) {
        if (key == "server_profile" || key == "client_profile") {
            auto p = parse_profile(field_string(doc, key.c_str()));
            if (!p) throw pki::ConfigError("unknown profile '" + value.get<std::string>() + "'");
            (key == "server_profile" ? s.server_profile : s.client_profile) = *p;
        } else if (key == "user_auth") {
            auto a = parse_user_auth(field_string(doc, "user_auth"));
            if (!a) throw pki::ConfigError("unknown user_auth '" + value.get<std::string>() + "'");
            s.user_auth = *a;
        } else if (key == "attack") {
            auto k = parse_attack(field_string(doc, "attack"));
            if (!k) throw pki::ConfigError("unknown attack '" + value.get<std::string>() + "'");
            s.attack = *k;
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) throw pki::ConfigError("scenario field 'seed' must be a non-negative integer");
            s.seed = value.get<std::uint64_t>();
        } else if (key == "auto_accept") {
            if (!value.is_boolean()) throw pki::ConfigError("scenario field 'auto_accept' must be a boolean");
            s.auto_accept = value.get<bool>();
        } else if (key != "name") {
            throw pki::ConfigError("unknown scenario field '" + key + "'");
        }
    }
    return s;
}

std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path)
{
    const auto doc = pki::read_json_file(path);
    std::vector<ScenarioSpec> out;
    try {
        if (doc.is_array())
            for (const auto& d : doc) out.push_back(scenario_from_json(d));
        else
            out.push_back(scenario_from_json(doc));
    } catch (const pki::ConfigError& e) {
        throw pki::ConfigError(path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace uatrust::assess
