#pragma once

#include "uatrust/assess/scenario.hpp"
#include "uatrust/pki/config.hpp"

namespace uatrust::assess {

enum class ReportFormat { Human, Machine };

std::optional<ReportFormat> parse_report_format(std::string_view name);

// Machine form: one JSON document with the AssessmentReport field names. Passwords are
// replaced by "<redacted>" unless show_secrets. Rendering is a pure function of the report.
std::string render_report(const AssessmentReport& report, ReportFormat format, bool show_secrets = false);
pki::Json report_to_json(const AssessmentReport& report, bool show_secrets = false);

// Several reports as a JSON array (machine) or concatenated sections (human).
std::string render_reports(const std::vector<AssessmentReport>& reports, ReportFormat format, bool show_secrets = false);

std::string render_outcome(const attacks::AttackOutcome& outcome, ReportFormat format, bool show_secrets = false);
pki::Json outcome_to_json(const attacks::AttackOutcome& outcome, bool show_secrets = false);

// Scenario spec files: {"server_profile", "client_profile", "user_auth", "attack", "seed",
// "auto_accept"}; missing fields keep their defaults. Errors: pki::ConfigError.
ScenarioSpec scenario_from_json(const pki::Json& doc);
std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path);  // object or array

}  // namespace uatrust::assess
