#include <doctest.h>

#include <cmath>
#include <vector>

#include "coalflow/stats.hpp"

using namespace coalflow;

TEST_CASE("normal cdf and Kolmogorov survival against frozen oracles") {
  CHECK(normal_cdf(1.3) == doctest::Approx(0.9031995154143897).epsilon(1e-13));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-12));
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-12));
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-12));
  CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("moments") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanSe m = mean_se(v);
  CHECK(m.mean == 2.5);
  CHECK(m.n == 4);
  CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  const std::vector<double> w{2.0, 4.0, 6.0, 8.0};
  const std::vector<double> z{8.0, 6.0, 4.0, 2.0};
  CHECK(pearson_correlation(v, w) == doctest::Approx(1.0));
  CHECK(pearson_correlation(v, z) == doctest::Approx(-1.0));
}

TEST_CASE("KS statistics") {
  const std::vector<double> a{0.1, 0.4, 0.7, 0.9, 1.3};
  const std::vector<double> b{0.2, 0.5, 0.6, 1.1, 1.5, 1.7};
  const TestResult r = ks_two_sample(a, b);
  CHECK(r.statistic == doctest::Approx(1.0 / 3.0));
  CHECK(r.p_value > 0.5);
  CHECK(r.p_value <= 1.0);

  // One sample: the uniform grid (i - 0.5) / n has D = 0.5 / n.
  std::vector<double> grid(100);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = (i + 0.5) / 100.0;
  const TestResult g = ks_one_sample(grid, [](double x) { return x; });
  CHECK(g.statistic == doctest::Approx(0.005));
  CHECK(g.p_value > 0.99);
  std::vector<double> skewed(200);
  for (std::size_t i = 0; i < skewed.size(); ++i) skewed[i] = std::pow((i + 0.5) / 200.0, 2.0);
  CHECK(ks_one_sample(skewed, [](double x) { return x; }).p_value < 1e-6);
}

TEST_CASE("energy distance detects a location shift and accepts equal laws") {
  RngStream rng(31);
  Sample a{{}, 2}, b{{}, 2}, c{{}, 2};
  for (int i = 0; i < 300; ++i) {
    for (int d = 0; d < 2; ++d) {
      a.values.push_back(rng.normal());
      b.values.push_back(rng.normal());
      c.values.push_back(rng.normal() + 0.5);
    }
  }
  CHECK(a.size() == 300);
  const TestResult same = energy_distance_test(a, b, 199, RngStream(1));
  const TestResult diff = energy_distance_test(a, c, 199, RngStream(1));
  CHECK(same.p_value > 0.01);
  CHECK(diff.p_value <= 0.01);
  CHECK(diff.statistic > same.statistic);
  // Deterministic given the stream.
  CHECK(energy_distance_test(a, c, 199, RngStream(1)).p_value == diff.p_value);
}

TEST_CASE("distance correlation sees nonlinear dependence") {
  RngStream rng(32);
  std::vector<double> x(400), y(400), z(400);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = x[i] * x[i] + 0.1 * rng.normal();
    z[i] = rng.normal();
  }
  CHECK(std::abs(pearson_correlation(x, y)) < 0.2);
  CHECK(distance_correlation_test(x, y, 199, RngStream(2)).p_value <= 0.01);
  CHECK(distance_correlation_test(x, z, 199, RngStream(2)).p_value > 0.01);
}
