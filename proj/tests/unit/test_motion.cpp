#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "coalflow/errors.hpp"
#include "coalflow/motion.hpp"

using namespace coalflow;

TEST_CASE("equal starts share a cluster and particles join on landing") {
  const double starts[] = {0.0, 0.0, 1.0};
  SystemState s = SystemState::from_starts(starts);
  CHECK(s.cluster_count() == 2);
  CHECK(s.particle_count() == 3);
  CHECK(s.cluster_of(0) == s.cluster_of(1));
  CHECK(s.cluster_size(1) == 2);
  const std::size_t p = s.add_particle(1.0);
  CHECK(s.cluster_of(p) == s.cluster_of(2));
  CHECK(s.cluster_count() == 2);
  s.add_particle(0.5);
  CHECK(s.cluster_count() == 3);
  CHECK(s.invariants_hold());
  const double unsorted[] = {1.0, 0.0};
  CHECK_THROWS_AS(SystemState::from_starts(unsorted), InvalidArgument);
}

TEST_CASE("apply_step merges crossings and hit pairs") {
  const double starts[] = {0.0, 1.0, 2.0, 3.0};
  SystemState s = SystemState::from_starts(starts);
  RngStream rng(1);
  const double proposed[] = {0.5, 0.4, 2.1, 3.5};  // 0 and 1 cross
  const char hit[] = {0, 0, 1};                    // 2 and 3 met inside the step
  s.apply_step(0.1, proposed, hit, rng);
  CHECK(s.cluster_count() == 2);
  CHECK(s.cluster_of(0) == s.cluster_of(1));
  CHECK(s.cluster_of(2) == s.cluster_of(3));
  CHECK(s.merge_log().size() == 2);
  CHECK(s.time() == doctest::Approx(0.1));
  CHECK(s.invariants_hold());
  const double p01 = s.position_of(0);
  CHECK((p01 == 0.5 || p01 == 0.4));
  const double p23 = s.position_of(3);
  CHECK((p23 == 2.1 || p23 == 3.5));
  // Merged survivors keep the lower id.
  CHECK(s.cluster_of(1) == 0);
}

TEST_CASE("n-point motion preconditions and shape") {
  const MotionModel model = DiffusionSpec::arratia();
  RngStream rng(2);
  CHECK_THROWS_AS(sample_npoint_motion(model, std::vector<double>{}, 1.0, 0.1, rng), EmptyStarts);
  CHECK_THROWS_AS(sample_npoint_motion(model, std::vector<double>{1.0, 0.0}, 1.0, 0.1, rng),
                  InvalidArgument);
  const std::vector<double> starts{-0.2, 0.0, 0.1, 0.5};
  const auto path = sample_npoint_motion(model, starts, 1.0, 0.01, rng);
  REQUIRE(path.size() == 101);
  for (std::size_t k = 1; k < path.size(); ++k) {
    CHECK(path[k].invariants_hold());
    CHECK(path[k].cluster_count() <= path[k - 1].cluster_count());
    CHECK(path[k].particle_count() == 4);
  }
  const auto again = sample_npoint_motion(model, starts, 1.0, 0.01, rng);
  for (std::size_t i = 0; i < 4; ++i) CHECK(again.back().position_of(i) == path.back().position_of(i));
  const auto end = simulate_endpoint(model, starts, 1.0, 0.01, rng);
  for (std::size_t i = 0; i < 4; ++i) CHECK(end.position_of(i) == path.back().position_of(i));
}

TEST_CASE("coalesced particles never separate") {
  const MotionModel model = DiffusionSpec::ornstein_uhlenbeck(1.0, 1.0);
  const std::vector<double> starts{0.0, 0.05, 0.1};
  const auto path = sample_npoint_motion(model, starts, 2.0, 0.01, RngStream(4));
  bool merged = false;
  for (const auto& st : path) {
    if (merged) CHECK(st.cluster_of(0) == st.cluster_of(1));
    merged = merged || st.cluster_of(0) == st.cluster_of(1);
  }
}

TEST_CASE("step_count covers the horizon") {
  CHECK(step_count(1.0, 0.1) == 10);
  CHECK(step_count(1.0, 0.3) == 4);
  CHECK(step_count(0.0, 0.1) == 0);
  CHECK_THROWS_AS(step_count(1.0, 0.0), NegativeDuration);
}

TEST_CASE("two-point no-meet law edge cases") {
  CHECK(pair_no_meet_probability_exact(0.0, 1.0, 1.0) == doctest::Approx(0.5204998778130465));
  CHECK(pair_no_meet_probability_exact(0.3, 0.3, 1.0) == 0.0);
  CHECK(pair_no_meet_probability_exact(0.0, 1.0, 0.0) == 1.0);
  CHECK(pair_no_meet_probability_exact(0.0, 1.0, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK_THROWS_AS(pair_no_meet_probability_exact(0.0, 1.0, -1.0), NegativeDuration);
}

TEST_CASE("bridge crossing probability against a fine-step bridge") {
  CHECK(bridge_cross_probability(0.5, 0.5, 0.5, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(bridge_cross_probability(0.0, 0.5, 0.5, 1.0), InvalidGap);
  CHECK_THROWS_AS(bridge_cross_probability(0.5, 0.5, 0.0, 1.0), NegativeDuration);

  // Brownian bridge 0.5 -> 0.5 over [0, 0.5], monitored on 4000 steps.
  RngStream rng(21);
  const int reps = 10000;
  const int steps = 4000;
  const double T = 0.5;
  const double h = T / steps;
  int hits = 0;
  std::vector<double> w(steps + 1);
  for (int r = 0; r < reps; ++r) {
    w[0] = 0.0;
    for (int k = 1; k <= steps; ++k) w[k] = w[k - 1] + std::sqrt(h) * rng.normal();
    for (int k = 0; k <= steps; ++k) {
      const double b = 0.5 + w[k] - (k * h / T) * w[steps];
      if (b <= 0.0) {
        ++hits;
        break;
      }
    }
  }
  const double freq = static_cast<double>(hits) / reps;
  // Discrete monitoring misses some touches, so the estimate sits slightly low.
  CHECK(freq == doctest::Approx(std::exp(-1.0)).epsilon(0.07));
  CHECK(freq < std::exp(-1.0) + 0.015);
}

TEST_CASE("scale function and meeting bound") {
  const DiffusionSpec arratia = DiffusionSpec::arratia();
  CHECK(scale_function(arratia, 0.7) == doctest::Approx(0.7));
  CHECK(meeting_bound(arratia, 0.0, 0.1, -10.0, 10.0, 1.0) == doctest::Approx(0.05641895835477563));
  CHECK(meeting_bound(arratia, 0.0, 1.0, -10.0, 10.0, 1.0) == doctest::Approx(0.5641895835477563));
  // Frozen values of int_0^x exp(lambda y^2 / sigma^2) dy.
  const DiffusionSpec ou = DiffusionSpec::ornstein_uhlenbeck(1.0, 1.0);
  CHECK(scale_function(ou, 0.1) == doctest::Approx(0.10033433571892294).epsilon(1e-9));
  CHECK(scale_derivative(ou, 0.5) == doctest::Approx(std::exp(0.25)));
  const DiffusionSpec ou2 = DiffusionSpec::ornstein_uhlenbeck(1.0, std::sqrt(2.0));
  CHECK(scale_function(ou2, 0.5) == doctest::Approx(0.5216384117284272).epsilon(1e-9));
  const DiffusionSpec generic = DiffusionSpec::generic([](double x) { return -x; }, [](double) { return 1.0; }, 1.0);
  CHECK(scale_function(generic, 0.1) == doctest::Approx(0.10033433571892294).epsilon(1e-9));
  CHECK_THROWS_AS(meeting_bound(arratia, 0.0, 0.1, -1.0, 1.0, 0.0), NegativeDuration);
}

TEST_CASE("diffusion coefficient must stay positive") {
  const DiffusionSpec bad = DiffusionSpec::generic([](double) { return 0.0; }, [](double x) { return x; }, 1.0);
  CHECK_THROWS_AS(bad.require_positive_diffusion(-1.0, 1.0), NonPositiveDiffusion);
  CHECK_NOTHROW(DiffusionSpec::arratia().require_positive_diffusion(-1.0, 1.0));
  CHECK_THROWS_AS(DiffusionSpec::ornstein_uhlenbeck(0.0, 1.0), InvalidArgument);
}

TEST_CASE("Harris flow: correlation conditions and stepping") {
  const HarrisSpec spec;
  const auto check = check_harris_conditions(spec);
  CHECK(check.ok());
  CHECK(check.integral > 0.0);
  CHECK(std::isfinite(check.integral));
  const MotionModel model = spec;
  const std::vector<double> starts{0.0, 0.01, 0.5, 2.0};
  const auto path = sample_npoint_motion(model, starts, 1.0, 0.001, RngStream(8));
  for (const auto& st : path) CHECK(st.invariants_hold());
  CHECK(path.back().cluster_count() <= 4);
  CHECK(path.back().cluster_count() >= 1);
}
