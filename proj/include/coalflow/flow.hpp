#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "coalflow/report.hpp"
#include "coalflow/skeleton.hpp"

namespace coalflow {

/// Lower envelope of a built skeleton.
struct SkeletonEnvelope {
  std::shared_ptr<const SkeletonFlow> skeleton;
};

/// f(s,x;t) = floor(x) + g(t - s + g^-1(x - floor(x))) with g(u) = u / (1 + u).
/// Every trajectory starts at an integer; the range at any time is R \ Z.
///
/// Birth times are resolved on a 2^-26 grid, so the trajectory through a
/// computed point is recovered exactly and composition is bit-exact. Values
/// differ from the closed form by at most 2^-27 in time.
struct AnalyticFlow {};

/// f(s,x;t) = x. Has no fresh points, so it is not a member of the flow space;
/// used as a negative-control fixture.
struct IdentityFlow {};

class FlowElement {
 public:
  using Backend = std::variant<SkeletonEnvelope, AnalyticFlow, IdentityFlow>;

  static FlowElement envelope(std::shared_ptr<const SkeletonFlow> skeleton);
  static FlowElement analytic() { return FlowElement(AnalyticFlow{}); }
  static FlowElement identity() { return FlowElement(IdentityFlow{}); }

  [[nodiscard]] const Backend& backend() const { return backend_; }
  [[nodiscard]] double shift_offset() const { return shift_; }
  [[nodiscard]] const SkeletonFlow* skeleton() const;

 private:
  explicit FlowElement(Backend backend) : backend_(std::move(backend)) {}
  friend FlowElement shift(const FlowElement& f, double h);

  Backend backend_;
  double shift_ = 0.0;
};

struct EvalQuery {
  double s = 0.0;
  double x = 0.0;
  double t = 0.0;
};

struct Evaluation {
  double value = 0.0;
  /// Skeleton trajectory followed (envelope backend, t > s only).
  std::optional<std::size_t> trajectory;
};

/// f(s, x; t). Throws InvalidArgument if t < s, OutOfHorizon / OffGridTime
/// outside a skeleton's time grid and AboveRange when no skeleton trajectory
/// is at or above x at time s.
double evaluate(const FlowElement& f, const EvalQuery& q);
Evaluation evaluate_traced(const FlowElement& f, const EvalQuery& q);

/// Lattice used to materialize the range of backends whose range is a
/// continuum (analytic, identity).
struct RangeLattice {
  double lo = -2.0;
  double hi = 2.0;
  double spacing = 1.0 / 64.0;
};

/// Range at time s: {f(r, x; s) : r < s}, sorted, no duplicates.
std::vector<double> range_at(const FlowElement& f, double s, const RangeLattice& lattice = {});

/// x is not in the range at time s.
bool is_fresh(const FlowElement& f, double s, double x);

/// theta_h: evaluate(shift(f, h), (s, x, t)) == evaluate(f, (s + h, x, t + h)).
FlowElement shift(const FlowElement& f, double h);

/// phi(t, f, x) = f(0, x; t).
double cocycle(double t, const FlowElement& f, double x);

struct LtWitness {
  double p = 0.0;
  double u = 0.0;
};

/// A point (p, u) with p < s, f(p,u;s) >= x and f(p,u;t) < c, if one exists
/// among the searched candidates (skeleton: every class started before s;
/// continuum backends: bisection on u along a ladder of p -> s).
std::optional<LtWitness> find_lt_witness(const FlowElement& f, const EvalQuery& q, double c);

/// On a skeleton the witness search only sees classes started before s, so the
/// answer matches evaluate() when the followed trajectory is older than s.
bool characterize_lt(const FlowElement& f, const EvalQuery& q, double c);

struct AxiomSamplePlan {
  /// Candidate times; for skeleton backends they must be on the grid.
  std::vector<double> times;
  double x_lo = 0.0;
  double x_hi = 1.0;
  std::size_t tuples = 10000;
  std::uint64_t seed = 1;
  /// Lattice spacing for continuum ranges and right-continuity probes.
  double spacing = 1.0 / 64.0;
  /// Maximum range gap allowed by F2.
  double density_tolerance = 8.0 / 64.0;
  /// Allowed step for the F3 right-continuity surrogate.
  double continuity_tolerance = 1e-6;
  /// F2 is checked at times >= times.front() + warmup.
  double warmup = 0.0;
  /// Fraction of [x_lo, x_hi] excluded on each side for F2.
  double interior_margin = 0.0;
};

/// Default plan for a skeleton envelope: grid times, the window interior and
/// the tolerances of the skeleton config.
AxiomSamplePlan default_plan(const SkeletonFlow& skeleton, std::size_t tuples, std::uint64_t seed);
AxiomSamplePlan default_analytic_plan(std::size_t tuples, std::uint64_t seed);

/// F1-F5 on sampled tuples; failures are reported, never thrown.
std::vector<TestReport> check_flow_axioms(const FlowElement& f, const AxiomSamplePlan& plan);

/// phi(t + s, f, x) == phi(t, shift(f, s), phi(s, f, x)) exactly, for
/// `samples` draws of s, t from `times` (s + t must stay in `times` range)
/// and x uniform in [x_lo, x_hi]. Out-of-domain draws are not counted.
TestReport check_cocycle(const FlowElement& f, std::span<const double> times, double x_lo,
                         double x_hi, std::size_t samples, std::uint64_t seed);

/// CSV rows "s,x,t,value,trajectory_id" (id empty for continuum backends).
/// Queries outside the domain are skipped.
void write_trace_csv(std::ostream& out, const FlowElement& f, std::span<const EvalQuery> queries);

/// %.17g formatting used by all CSV writers.
std::string format_double(double v);

}  // namespace coalflow
