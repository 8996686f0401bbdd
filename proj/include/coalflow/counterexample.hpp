#pragma once

#include <cstddef>
#include <string>

#include "coalflow/report.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

/// A point of [0,1]^2 with Lebesgue measure.
struct OmegaSquare {
  double w1 = 0.0;
  double w2 = 0.0;

  static OmegaSquare sample(RngStream& rng);
};

/// Flow on [0,1] at times {0,1,2}: psi_{0,1} = w1, psi_{1,2}(x) = w2 unless
/// x == w1 (then w1), psi_{0,2} = w1. Throws InvalidTimePair for s > t or
/// times outside {0,1,2}.
double psi(int s, int t, const OmegaSquare& w, double x);

/// Same single-map laws, different joints: psi~_{0,1} = w1, psi~_{1,2} = w2,
/// psi~_{0,2} = w2.
double psi_tilde(int s, int t, const OmegaSquare& w, double x);

struct AppendixOptions {
  std::size_t replicas = 10000;
  std::size_t correlation_replicas = 100000;
  std::size_t grid_points = 101;
  std::size_t dcor_samples = 1000;
  std::size_t permutations = 199;
  double alpha = 0.01;
  double correlation_limit = 0.01;
};

/// Composition, marginal, independence and distinguisher reports for both
/// flows. Throws InvalidArgument when replicas < 10^4.
ReportBundle verify_appendix(const AppendixOptions& options, const RngStream& rng);

/// Text table: same marginals, different joints.
std::string appendix_verdict_table(const ReportBundle& bundle);

}  // namespace coalflow
