#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "coalflow/errors.hpp"
#include "coalflow/flow.hpp"

using namespace coalflow;

namespace {

std::shared_ptr<const SkeletonFlow> small_skeleton(std::uint64_t seed) {
  SkeletonConfig c;
  c.window_lo = -0.5;
  c.window_hi = 0.5;
  c.spacing = 1.0 / 16.0;
  c.dt = 1e-3;
  c.t1 = 0.2;
  c.start_times = SkeletonConfig::every(0.0, 0.2, 0.01);
  return std::make_shared<const SkeletonFlow>(build_skeleton(c, RngStream(seed)));
}

}  // namespace

TEST_CASE("analytic flow values") {
  const FlowElement f = FlowElement::analytic();
  CHECK(evaluate(f, {0.0, 0.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(evaluate(f, {0.0, 2.0, 1.0}) == doctest::Approx(2.5).epsilon(1e-7));
  CHECK(evaluate(f, {0.3, 0.7, 0.3}) == 0.7);
  // g^-1(0.5) = 1, so f(0, 0.5; 1) = g(2) = 2/3.
  CHECK(evaluate(f, {0.0, 0.5, 1.0}) == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  CHECK_THROWS_AS(evaluate(f, {1.0, 0.0, 0.5}), InvalidArgument);
  CHECK(is_fresh(f, 0.4, 1.0));
  CHECK_FALSE(is_fresh(f, 0.4, 1.25));
  for (double v : range_at(f, 0.5)) CHECK(v != std::floor(v));
}

TEST_CASE("identity fixture") {
  const FlowElement f = FlowElement::identity();
  CHECK(evaluate(f, {0.0, 0.37, 5.0}) == 0.37);
  CHECK_FALSE(is_fresh(f, 0.5, 0.25));
  bool f4_failed = false;
  for (const auto& r : check_flow_axioms(f, default_analytic_plan(500, 3))) {
    if (r.name.find("F4") != std::string::npos) f4_failed = !r.pass;
  }
  CHECK(f4_failed);
}

TEST_CASE("analytic flow satisfies the axioms") {
  const auto reports = check_flow_axioms(FlowElement::analytic(), default_analytic_plan(2000, 5));
  CHECK(reports.size() >= 5);
  for (const auto& r : reports) {
    INFO(r.name << " stat=" << r.statistic << " ref=" << r.reference << " " << r.notes);
    CHECK(r.as_expected());
  }
}

TEST_CASE("envelope evaluation") {
  const auto sk = small_skeleton(9);
  const FlowElement f = FlowElement::envelope(sk);
  CHECK(evaluate(f, {0.05, 0.1, 0.05}) == 0.1);
  // Lattice points at start times follow their own trajectory.
  const std::size_t id = sk->trajectory_id(0, 4);
  const Evaluation e = evaluate_traced(f, {0.0, sk->config().lattice_point(4), 0.2});
  CHECK(e.value == sk->position(id, sk->time_steps()));
  CHECK_THROWS_AS(evaluate(f, {0.0, 10.0, 0.1}), AboveRange);
  CHECK_THROWS_AS(evaluate(f, {0.0, 0.0, 0.5}), OutOfHorizon);
  CHECK_THROWS_AS(evaluate(f, {0.0005, 0.0, 0.1}), OffGridTime);

  // Monotone in x.
  double prev = -1e300;
  for (int i = 0; i <= 40; ++i) {
    const double v = evaluate(f, {0.02, -0.5 + i * 0.025, 0.15});
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("shift and cocycle") {
  const auto sk = small_skeleton(11);
  const FlowElement f = FlowElement::envelope(sk);
  const FlowElement g = shift(f, 0.05);
  CHECK(g.shift_offset() == doctest::Approx(0.05));
  CHECK(evaluate(g, {0.0, 0.1, 0.1}) == evaluate(f, {0.05, 0.1, 0.15}));
  CHECK(cocycle(0.1, f, 0.2) == evaluate(f, {0.0, 0.2, 0.1}));
  std::vector<double> times;
  for (int k = 0; k <= 20; ++k) times.push_back(k * 0.01);
  const TestReport r = check_cocycle(f, times, -0.4, 0.4, 200, 1);
  CHECK(r.pass);
  CHECK(r.statistic == 0.0);
  const TestReport a = check_cocycle(FlowElement::analytic(), times, -1.0, 1.0, 200, 1);
  CHECK(a.pass);
}

TEST_CASE("lt characterization agrees with evaluation") {
  const auto sk = small_skeleton(13);
  const FlowElement f = FlowElement::envelope(sk);
  int agree = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    const EvalQuery q{0.05, -0.3 + 0.03 * i, 0.15};
    Evaluation e;
    try {
      e = evaluate_traced(f, q);
    } catch (const Error&) {
      continue;
    }
    // Trajectories born at s have no witness among older classes.
    if (sk->trajectory(*e.trajectory).activation >= sk->step_of(q.s)) continue;
    const double v = e.value;
    for (double c : {v - 0.01, v, v + 0.01}) {
      ++total;
      if (characterize_lt(f, q, c) == (v < c)) ++agree;
    }
  }
  CHECK(total > 0);
  CHECK(agree == total);
  const FlowElement a = FlowElement::analytic();
  const EvalQuery q{0.0, 0.25, 1.0};
  const double v = evaluate(a, q);
  CHECK(characterize_lt(a, q, v + 1e-3));
  CHECK_FALSE(characterize_lt(a, q, v - 1e-3));
}

TEST_CASE("skeleton envelope satisfies the axioms") {
  SkeletonConfig c;
  c.window_lo = -1.0;
  c.window_hi = 1.0;
  c.spacing = 1.0 / 32.0;
  c.dt = 2.5e-4;
  c.t1 = 0.25;
  c.start_times = SkeletonConfig::every(0.0, 0.25, c.dt);
  auto sk = std::make_shared<const SkeletonFlow>(build_skeleton(c, RngStream(21)));
  for (const auto& r : check_flow_axioms(FlowElement::envelope(sk), default_plan(*sk, 2000, 2))) {
    INFO(r.name << " stat=" << r.statistic << " ref=" << r.reference << " " << r.notes);
    CHECK(r.as_expected());
  }
}

TEST_CASE("trace csv and formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  std::ostringstream out;
  const EvalQuery qs[] = {{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
  write_trace_csv(out, FlowElement::analytic(), qs);
  const std::string text = out.str();
  CHECK(text.find("s,x,t,value,trajectory_id") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
