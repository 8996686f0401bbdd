#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace coalflow {

/// How a report's verdict is derived from its numbers.
enum class Rule {
  AtMost,             // statistic <= reference
  AtMostPlus3Se,      // statistic <= reference + 3 * mc_std_error
  WithinTolerance,    // |statistic - reference| <= tolerance
  PValueAtLeast,      // statistic is a p-value, reference is the level
  Equal,              // statistic == reference (exact counts)
};

std::string rule_name(Rule rule);

struct TestReport {
  std::string name;
  Rule rule = Rule::Equal;
  double statistic = 0.0;
  double reference = 0.0;
  double mc_std_error = 0.0;
  double tolerance = 0.0;
  std::size_t replicas = 0;
  bool pass = false;
  /// The report belongs to a negative control: the check is expected to fail.
  bool negative_control = false;
  bool skipped = false;
  std::string notes;

  /// Recomputes `pass` from the numbers and the rule.
  void decide();
  /// A regular report is satisfied when it passes; a control when it fails.
  [[nodiscard]] bool as_expected() const { return skipped || pass != negative_control; }
};

TestReport make_report(std::string name, Rule rule, double statistic, double reference,
                       double mc_std_error = 0.0, double tolerance = 0.0);

TestReport skipped_report(std::string name, std::string why);

struct ReportBundle {
  std::string name;
  std::vector<TestReport> reports;

  void append(std::vector<TestReport> more);
  void append(TestReport report) { reports.push_back(std::move(report)); }
  [[nodiscard]] bool ok() const;
};

nlohmann::json to_json(const TestReport& report);
nlohmann::json to_json(const ReportBundle& bundle, std::uint64_t seed, std::uint64_t config_hash);

}  // namespace coalflow
