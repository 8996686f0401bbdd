#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "coalflow/rng.hpp"

namespace coalflow {

double normal_cdf(double z);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> values);
double sample_variance(std::span<const double> values);
double pearson_correlation(std::span<const double> a, std::span<const double> b);

/// Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic p-values with Stephens' effective-size correction.
TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Row-major samples of dimension `dim`.
struct Sample {
  std::vector<double> values;
  std::size_t dim = 1;
  [[nodiscard]] std::size_t size() const { return dim ? values.size() / dim : 0; }
  [[nodiscard]] const double* row(std::size_t i) const { return values.data() + i * dim; }
};

/// Energy-distance two-sample test with a label-permutation p-value.
/// Keeps the pooled pairwise distances in memory ((n+m)^2/2 floats).
TestResult energy_distance_test(const Sample& a, const Sample& b, std::size_t permutations,
                                RngStream rng);

/// Squared sample distance correlation of paired scalars and a permutation
/// p-value for independence.
TestResult distance_correlation_test(std::span<const double> x, std::span<const double> y,
                                     std::size_t permutations, RngStream rng);

}  // namespace coalflow
