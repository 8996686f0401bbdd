#include "coalflow/report.hpp"

#include <cmath>

namespace coalflow {

std::string rule_name(Rule rule) {
  switch (rule) {
    case Rule::AtMost:
      return "statistic <= reference";
    case Rule::AtMostPlus3Se:
      return "statistic <= reference + 3*mc_std_error";
    case Rule::WithinTolerance:
      return "|statistic - reference| <= tolerance";
    case Rule::PValueAtLeast:
      return "p-value >= level";
    case Rule::Equal:
      return "statistic == reference";
  }
  return "unknown";
}

void TestReport::decide() {
  if (skipped) {
    pass = true;
    return;
  }
  if (!std::isfinite(statistic) || std::isnan(reference)) {
    pass = false;
    return;
  }
  switch (rule) {
    case Rule::AtMost:
      pass = statistic <= reference;
      break;
    case Rule::AtMostPlus3Se:
      pass = statistic <= reference + 3.0 * mc_std_error;
      break;
    case Rule::WithinTolerance:
      pass = std::abs(statistic - reference) <= tolerance;
      break;
    case Rule::PValueAtLeast:
      pass = statistic >= reference;
      break;
    case Rule::Equal:
      pass = statistic == reference;
      break;
  }
}

TestReport make_report(std::string name, Rule rule, double statistic, double reference,
                       double mc_std_error, double tolerance) {
  TestReport r;
  r.name = std::move(name);
  r.rule = rule;
  r.statistic = statistic;
  r.reference = reference;
  r.mc_std_error = mc_std_error;
  r.tolerance = tolerance;
  r.decide();
  return r;
}

TestReport skipped_report(std::string name, std::string why) {
  TestReport r;
  r.name = std::move(name);
  r.skipped = true;
  r.notes = std::move(why);
  r.decide();
  return r;
}

void ReportBundle::append(std::vector<TestReport> more) {
  for (auto& r : more) reports.push_back(std::move(r));
}

bool ReportBundle::ok() const {
  for (const auto& r : reports) {
    if (!r.as_expected()) return false;
  }
  return true;
}

nlohmann::json to_json(const TestReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["rule"] = rule_name(report.rule);
  j["statistic"] = report.statistic;
  j["reference"] = report.reference;
  j["error"] = report.mc_std_error;
  j["tolerance"] = report.tolerance;
  j["replicas"] = report.replicas;
  j["pass"] = report.pass;
  j["negative_control"] = report.negative_control;
  j["skipped"] = report.skipped;
  j["notes"] = report.notes;
  return j;
}

nlohmann::json to_json(const ReportBundle& bundle, std::uint64_t seed, std::uint64_t config_hash) {
  nlohmann::json j;
  j["bundle"] = bundle.name;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["ok"] = bundle.ok();
  j["reports"] = nlohmann::json::array();
  for (const auto& r : bundle.reports) j["reports"].push_back(to_json(r));
  return j;
}

}  // namespace coalflow
