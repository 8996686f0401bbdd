#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coalflow/flow.hpp"
#include "coalflow/motion.hpp"
#include "coalflow/report.hpp"
#include "coalflow/rng.hpp"
#include "coalflow/skeleton.hpp"

namespace coalflow {

/// Frequency of "two Arratia trajectories from x < y have not met by t"
/// against erf((y - x) / (2 sqrt t)); WithinTolerance.
TestReport test_two_point_law(double x, double y, double t, std::size_t replicas,
                              const RngStream& rng, double dt = 0.01, double tolerance = 0.01);

/// P(both paths stay in [c, c_hi] on [0, t] and never meet) against
/// meeting_bound; AtMostPlus3Se.
TestReport test_meeting_bound(const DiffusionSpec& spec, double x, double y, double c,
                              double c_hi, double t, std::size_t replicas, const RngStream& rng,
                              double dt = 1e-3);

/// Mean number of distinct time-t values of n_starts paths started evenly
/// in (a, b) at time s, against 1 + meeting_bound(a, b); AtMostPlus3Se.
/// Harris models are compared with the Brownian bound.
TestReport test_cluster_count(const MotionModel& model, double a, double b, double s, double t,
                              std::size_t n_starts, std::size_t replicas, const RngStream& rng,
                              double dt = 1e-3);

struct ShiftInvarianceOptions {
  double alpha = 0.01;
  std::size_t permutations = 199;
  /// Marks the reports as negative controls (expected to fail).
  bool negative_control = false;
};

/// Two independent replica sets: set A evaluates each query on fresh
/// skeletons, set B evaluates it on shift(f, h). Returns the Bonferroni KS
/// summary (minimum p-value over queries) and the joint energy-distance test
/// on the vector of all query values.
std::vector<TestReport> test_shift_invariance(const SkeletonConfig& config, double h,
                                              std::span<const EvalQuery> queries,
                                              std::size_t replicas, const RngStream& rng,
                                              const ShiftInvarianceOptions& options = {});

/// KS against the analytic endpoint law plus mean and variance checks.
/// Generic specs have no analytic law: a skipped report is returned.
std::vector<TestReport> test_marginal_law(const DiffusionSpec& spec, double x, double t,
                                          std::size_t replicas, const RngStream& rng,
                                          double dt = 1e-3, double alpha = 0.01,
                                          double mean_tolerance = 0.01,
                                          double variance_tolerance = 0.02);

/// r(t) = P(max_{[0,t]} |X - u| > eps) / t on a decreasing ladder: one report
/// counts increases beyond MC error, one bounds the last rung by `threshold`.
std::vector<TestReport> test_small_time_continuity(const DiffusionSpec& spec, double u,
                                                   double eps, std::span<const double> t_ladder,
                                                   std::size_t replicas, const RngStream& rng,
                                                   double threshold = 0.1,
                                                   std::size_t steps_per_rung = 100);

/// Coalescing sampler stopped at its first merge against independent paths
/// stopped at their first meeting (same bridge rule, separate code). Features:
/// stopped positions at t/4, t/2, 3t/4, t and the stopping time; energy test.
TestReport test_stopped_equivalence(const DiffusionSpec& spec, std::span<const double> starts,
                                    double t, std::size_t replicas, const RngStream& rng,
                                    double dt = 0.01, double alpha = 0.01,
                                    std::size_t permutations = 199);

}  // namespace coalflow
