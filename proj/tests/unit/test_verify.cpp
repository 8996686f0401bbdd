#include <doctest.h>

#include <cmath>
#include <vector>

#include "coalflow/verify.hpp"

using namespace coalflow;

TEST_CASE("two-point law at moderate scale") {
  const TestReport r = test_two_point_law(0.0, 1.0, 1.0, 20000, RngStream(1), 0.01, 0.03);
  INFO(r.statistic << " vs " << r.reference);
  CHECK(r.reference == doctest::Approx(0.5204998778130465).epsilon(1e-12));
  CHECK(r.pass);
  // Equal starts have met at time 0.
  const TestReport same = test_two_point_law(0.5, 0.5, 1.0, 100, RngStream(1));
  CHECK(same.statistic == 0.0);
}

TEST_CASE("meeting bound and cluster count") {
  const TestReport m = test_meeting_bound(DiffusionSpec::arratia(), 0.0, 0.1, -10.0, 10.0, 1.0,
                                          5000, RngStream(2), 1e-3);
  CHECK(m.reference == doctest::Approx(0.1 * 0.5641895835477563));
  CHECK(m.pass);
  const TestReport one = test_cluster_count(DiffusionSpec::arratia(), 0.0, 1.0, 0.0, 1.0, 1, 20,
                                            RngStream(3), 1e-2);
  CHECK(one.statistic == 1.0);
  CHECK(one.pass);
  const TestReport many = test_cluster_count(DiffusionSpec::arratia(), 0.0, 1.0, 0.0, 1.0, 64, 50,
                                             RngStream(3), 1e-2);
  CHECK(many.reference == doctest::Approx(1.5641895835477563));
  CHECK(many.pass);
}

TEST_CASE("marginal law edge cases and OU moments") {
  const auto zero = test_marginal_law(DiffusionSpec::arratia(), 0.3, 0.0, 100, RngStream(4));
  REQUIRE(!zero.empty());
  for (const auto& r : zero) CHECK(r.as_expected());
  const auto generic = test_marginal_law(
      DiffusionSpec::generic([](double) { return 0.0; }, [](double) { return 1.0; }, 0.0), 0.0,
      1.0, 100, RngStream(4));
  REQUIRE(generic.size() == 1);
  CHECK(generic[0].skipped);
  const auto ou = test_marginal_law(DiffusionSpec::ornstein_uhlenbeck(1.0, std::sqrt(2.0)), 1.0,
                                    1.0, 20000, RngStream(5), 1e-2, 0.01, 0.03, 0.05);
  for (const auto& r : ou) {
    INFO(r.name << " " << r.statistic << " vs " << r.reference);
    CHECK(r.as_expected());
  }
}

TEST_CASE("small-time continuity on a ladder") {
  const std::vector<double> ladder{0.04, 0.02, 0.01};
  const auto reports = test_small_time_continuity(DiffusionSpec::arratia(), 0.0, 0.5, ladder, 4000,
                                                  RngStream(6));
  for (const auto& r : reports) {
    INFO(r.name << " " << r.statistic << " vs " << r.reference);
    CHECK(r.as_expected());
  }
}

TEST_CASE("stopped equivalence") {
  const std::vector<double> starts{0.0, 1.0};
  const TestReport r =
      test_stopped_equivalence(DiffusionSpec::arratia(), starts, 1.0, 800, RngStream(7), 0.01, 0.01, 99);
  INFO(r.statistic << " " << r.notes);
  CHECK(r.pass);
  const std::vector<double> equal{0.5, 0.5};
  CHECK(test_stopped_equivalence(DiffusionSpec::arratia(), equal, 1.0, 200, RngStream(7), 0.01, 0.01, 99)
            .as_expected());
}

TEST_CASE("shift invariance on a coarse skeleton") {
  SkeletonConfig c;
  c.window_lo = -1.0;
  c.window_hi = 1.0;
  c.spacing = 1.0 / 16.0;
  c.dt = 1e-3;
  c.t1 = 1.0;
  c.start_times = SkeletonConfig::every(0.0, 1.0, 0.01);
  const std::vector<EvalQuery> qs{{0.0, 0.0, 0.25}, {0.1, 0.25, 0.5}};
  const auto reports = test_shift_invariance(c, 0.25, qs, 150, RngStream(8), {0.01, 49, false});
  for (const auto& r : reports) {
    INFO(r.name << " " << r.statistic << " vs " << r.reference);
    CHECK(r.as_expected());
  }
}
