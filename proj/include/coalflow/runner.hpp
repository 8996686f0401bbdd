#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "coalflow/flow.hpp"
#include "coalflow/report.hpp"
#include "coalflow/skeleton.hpp"

namespace coalflow {

inline constexpr const char* kToolVersion = "1.0.0";

struct ReplicaCounts {
  std::size_t cocycle_samples = 1000;
  std::size_t cocycle_skeletons = 5;
  std::size_t axiom_tuples = 10000;
  std::size_t two_point = 100000;
  std::size_t meeting_bound = 100000;
  std::size_t meeting_bound_ou = 20000;
  std::size_t cluster_count = 200;
  std::size_t shift_invariance = 2000;
  std::size_t marginals = 100000;
  std::size_t stopped = 5000;
  std::size_t small_time = 20000;
  std::size_t appendix = 10000;
  std::size_t appendix_correlation = 100000;
  std::size_t sp_skeletons = 3;
  std::size_t permutations = 199;
};

struct RunConfig {
  /// Skeleton behind simulate, axioms, cocycle and sp.
  SkeletonConfig skeleton;
  /// Skeleton family used by the shift-invariance bundle.
  SkeletonConfig shift_skeleton;
  std::vector<EvalQuery> shift_queries;
  std::vector<double> shift_h{0.25, 0.5};
  double negative_control_drift = 4.0;
  /// Step of the marginal-law simulations.
  double marginal_dt = 1e-3;
  ReplicaCounts replicas;
  std::vector<std::string> bundles{"all"};
  std::uint64_t seed = 42;
  std::filesystem::path out = "out";

  /// Throws ConfigError.
  void validate() const;
  /// Resolved configuration without seed and output directory.
  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::uint64_t hash() const;
};

/// Acceptance-scale defaults.
RunConfig default_run_config();
/// Same bundles with replica counts cut for quick runs.
RunConfig ci_run_config();

/// Fields override the profile named by "profile" ("full" or "ci").
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

const std::vector<std::string>& bundle_names();

/// Runs one named bundle ("all" runs every component once).
ReportBundle run_bundle(const RunConfig& config, const std::string& name);

struct VerifyOutcome {
  std::vector<ReportBundle> bundles;
  std::vector<std::filesystem::path> artifacts;
  bool ok = true;
};

/// report_<bundle>.json / .csv per selected bundle, the counterexample
/// verdict table when that bundle ran, and manifest.json.
VerifyOutcome cmd_verify(const RunConfig& config);

/// skeleton.bin, trajectories.csv, plot_data.csv, summary.json, manifest.json.
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config);

/// Evaluates every "s,x,t" row of the query file on the snapshot and writes
/// "s,x,t,value,status" rows; out-of-domain rows carry a status and no value.
void cmd_export(const std::filesystem::path& snapshot, const std::filesystem::path& queries,
                std::ostream& out);

/// Lists every other regular file in `dir` with its size and FNV-1a checksum.
void write_manifest(const std::filesystem::path& dir, const RunConfig& config,
                    const std::string& command);

void write_report_csv(std::ostream& out, const ReportBundle& bundle);

}  // namespace coalflow
