#include "coalflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "coalflow/errors.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

namespace {

// Birth-time resolution of the analytic flow.
constexpr double kQuantum = 0x1p-26;

// g(u) = u / (1 + u) and its inverse, written as compositions of monotone
// correctly-rounded operations so that monotonicity survives rounding.
double g(double u) { return 1.0 - 1.0 / (1.0 + u); }
double g_inv(double v) { return 1.0 / (1.0 - v) - 1.0; }

double analytic_birth(double s, double x, double n) {
  return std::round((s - g_inv(x - n)) / kQuantum) * kQuantum;
}

double analytic_value(double s, double x, double t) {
  const double n = std::floor(x);
  const double birth = analytic_birth(s, x, n);
  return n + g(std::max(0.0, t - birth));
}

const SkeletonFlow& skeleton_of(const SkeletonEnvelope& env) {
  if (!env.skeleton) throw InvalidArgument("envelope flow without a skeleton");
  return *env.skeleton;
}

// Index into live(k) of the lowest class at or above x, or live.size().
std::size_t lowest_at_or_above(const SkeletonFlow& sk, std::size_t k, double x) {
  const auto live = sk.live(k);
  std::size_t lo = 0;
  std::size_t hi = live.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (sk.position(live[mid], k) < x) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

[[noreturn]] void throw_above_range(double s, double x) {
  std::ostringstream msg;
  msg << "no skeleton trajectory at or above x = " << x << " at time s = " << s;
  throw AboveRange(msg.str());
}

}  // namespace

FlowElement FlowElement::envelope(std::shared_ptr<const SkeletonFlow> skeleton) {
  if (!skeleton) throw InvalidArgument("envelope flow needs a skeleton");
  return FlowElement(SkeletonEnvelope{std::move(skeleton)});
}

const SkeletonFlow* FlowElement::skeleton() const {
  if (const auto* env = std::get_if<SkeletonEnvelope>(&backend_)) return env->skeleton.get();
  return nullptr;
}

Evaluation evaluate_traced(const FlowElement& f, const EvalQuery& q) {
  if (!(q.s <= q.t)) throw InvalidArgument("evaluation needs s <= t");
  const double s = q.s + f.shift_offset();
  const double t = q.t + f.shift_offset();
  return std::visit(
      [&](const auto& b) -> Evaluation {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, SkeletonEnvelope>) {
          const SkeletonFlow& sk = skeleton_of(b);
          const std::size_t ks = sk.step_of(s);
          const std::size_t kt = sk.step_of(t);
          if (ks == kt) return {q.x, std::nullopt};
          const auto live = sk.live(ks);
          const std::size_t i = lowest_at_or_above(sk, ks, q.x);
          if (i == live.size()) throw_above_range(q.s, q.x);
          return {sk.position(live[i], kt), live[i]};
        } else if constexpr (std::is_same_v<B, AnalyticFlow>) {
          if (q.s == q.t) return {q.x, std::nullopt};
          return {analytic_value(s, q.x, t), std::nullopt};
        } else {
          return {q.x, std::nullopt};
        }
      },
      f.backend());
}

double evaluate(const FlowElement& f, const EvalQuery& q) { return evaluate_traced(f, q).value; }

std::vector<double> range_at(const FlowElement& f, double s, const RangeLattice& lattice) {
  const double abs_s = s + f.shift_offset();
  return std::visit(
      [&](const auto& b) -> std::vector<double> {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, SkeletonEnvelope>) {
          const SkeletonFlow& sk = skeleton_of(b);
          return sk.range_at_step(sk.step_of(abs_s));
        } else {
          if (!(lattice.spacing > 0.0) || lattice.hi < lattice.lo) {
            throw InvalidArgument("invalid range lattice");
          }
          std::vector<double> out;
          const auto n = static_cast<std::size_t>(std::floor((lattice.hi - lattice.lo) / lattice.spacing + 1e-9));
          for (std::size_t i = 0; i <= n; ++i) {
            const double x = lattice.lo + static_cast<double>(i) * lattice.spacing;
            if constexpr (std::is_same_v<B, AnalyticFlow>) {
              if (x == std::floor(x)) continue;  // integers are fresh
            }
            out.push_back(x);
          }
          return out;
        }
      },
      f.backend());
}

bool is_fresh(const FlowElement& f, double s, double x) {
  return std::visit(
      [&](const auto& b) -> bool {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, SkeletonEnvelope>) {
          const SkeletonFlow& sk = skeleton_of(b);
          const auto range = sk.range_at_step(sk.step_of(s + f.shift_offset()));
          return !std::binary_search(range.begin(), range.end(), x);
        } else if constexpr (std::is_same_v<B, AnalyticFlow>) {
          return x == std::floor(x);
        } else {
          return false;
        }
      },
      f.backend());
}

FlowElement shift(const FlowElement& f, double h) {
  FlowElement out = f;
  out.shift_ = f.shift_ + h;
  return out;
}

double cocycle(double t, const FlowElement& f, double x) {
  if (t < 0.0) throw NegativeDuration("cocycle needs t >= 0");
  return evaluate(f, {0.0, x, t});
}

std::optional<LtWitness> find_lt_witness(const FlowElement& f, const EvalQuery& q, double c) {
  if (!(q.s <= q.t)) throw InvalidArgument("evaluation needs s <= t");
  if (const auto* env = std::get_if<SkeletonEnvelope>(&f.backend())) {
    const SkeletonFlow& sk = skeleton_of(*env);
    const std::size_t ks = sk.step_of(q.s + f.shift_offset());
    const std::size_t kt = sk.step_of(q.t + f.shift_offset());
    const auto live = sk.live(ks);
    std::size_t i = lowest_at_or_above(sk, ks, q.x);
    if (i == live.size()) throw_above_range(q.s, q.x);
    // Classes started before s are exactly the skeleton points (p, u) with
    // p < s; by non-crossing the lowest one at or above x is the best witness.
    for (; i < live.size(); ++i) {
      const std::uint32_t id = live[i];
      if (sk.trajectory(id).activation >= ks) continue;
      if (!(sk.position(id, kt) < c)) return std::nullopt;
      return LtWitness{sk.time(ks - 1) - f.shift_offset(), sk.position(id, ks - 1)};
    }
    return std::nullopt;
  }

  // Continuum backends: walk p up to s and bisect for the lowest u whose
  // trajectory is at or above x at time s.
  for (int j = 1; j <= 20; ++j) {
    const double p = q.s - std::ldexp(1.0, -j);
    auto at_s = [&](double u) { return evaluate(f, {p, u, q.s}); };
    double lo = q.x - 2.0;
    double hi = q.x;
    if (!(at_s(hi) >= q.x) || !(at_s(lo) < q.x)) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi) break;
      (at_s(mid) >= q.x ? hi : lo) = mid;
    }
    if (evaluate(f, {p, hi, q.t}) < c) return LtWitness{p, hi};
  }
  return std::nullopt;
}

bool characterize_lt(const FlowElement& f, const EvalQuery& q, double c) {
  return find_lt_witness(f, q, c).has_value();
}

// ---------------------------------------------------------------------------
// Axiom checks
// ---------------------------------------------------------------------------

AxiomSamplePlan default_plan(const SkeletonFlow& skeleton, std::size_t tuples, std::uint64_t seed) {
  const SkeletonConfig& c = skeleton.config();
  AxiomSamplePlan plan;
  for (std::size_t k = 0; k <= skeleton.time_steps(); ++k) plan.times.push_back(skeleton.time(k));
  plan.x_lo = c.window_lo;
  plan.x_hi = c.window_hi;
  plan.tuples = tuples;
  plan.seed = seed;
  plan.spacing = c.spacing;
  plan.density_tolerance = c.epsilon_density();
  plan.continuity_tolerance = 4.0 * c.spacing + 3.0 * std::sqrt(c.step());
  plan.warmup = 0.01;
  plan.interior_margin = 0.25;
  return plan;
}

AxiomSamplePlan default_analytic_plan(std::size_t tuples, std::uint64_t seed) {
  AxiomSamplePlan plan;
  for (int i = -128; i <= 128; ++i) plan.times.push_back(i / 64.0);
  plan.x_lo = -2.0;
  plan.x_hi = 2.0;
  plan.tuples = tuples;
  plan.seed = seed;
  plan.spacing = 1.0 / 64.0;
  plan.density_tolerance = 8.0 / 64.0;
  plan.continuity_tolerance = 1e-6;
  return plan;
}

namespace {

struct Triple {
  double r, s, t;
};

Triple sample_times(const std::vector<double>& times, RngStream& rng) {
  const auto n = times.size();
  std::size_t idx[3];
  for (auto& i : idx) i = std::min<std::size_t>(n - 1, static_cast<std::size_t>(rng.uniform() * n));
  std::sort(idx, idx + 3);
  return {times[idx[0]], times[idx[1]], times[idx[2]]};
}

double sample_x(const AxiomSamplePlan& plan, RngStream& rng) {
  return plan.x_lo + (plan.x_hi - plan.x_lo) * rng.uniform();
}

bool in_domain_error(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const AboveRange&) {
    return true;
  } catch (const OutOfHorizon&) {
    return true;
  } catch (...) {
    return false;
  }
}

// Does the trajectory through (s, x) at time t start from a fresh point?
bool has_fresh_origin(const FlowElement& f, const EvalQuery& q, double value) {
  const double t_abs = q.t + f.shift_offset();
  return std::visit(
      [&](const auto& b) -> bool {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, SkeletonEnvelope>) {
          const SkeletonFlow& sk = *b.skeleton;
          const auto traced = evaluate_traced(f, q);
          if (!traced.trajectory) return false;
          const std::size_t id = *traced.trajectory;
          const auto& tr = sk.trajectory(id);
          const std::size_t kt = sk.step_of(t_abs);
          if (!(tr.activation < kt)) return false;
          const auto range = sk.range_at_step(tr.activation);
          if (std::binary_search(range.begin(), range.end(), tr.start_value)) return false;
          return sk.position(id, kt) == value;
        } else if constexpr (std::is_same_v<B, AnalyticFlow>) {
          // The trajectory through (s, x) starts at floor(x) at its birth time.
          const double n = std::floor(q.x);
          const double birth = analytic_birth(q.s + f.shift_offset(), q.x, n);
          return birth < t_abs && analytic_value(birth, n, t_abs) == value;
        } else {
          return false;  // no fresh points at all
        }
      },
      f.backend());
}

}  // namespace

std::vector<TestReport> check_flow_axioms(const FlowElement& f, const AxiomSamplePlan& plan) {
  if (plan.times.empty()) throw InvalidArgument("axiom plan needs candidate times");
  std::vector<double> times = plan.times;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  RngStream rng(plan.seed);

  std::size_t f1_bad = 0, f1_done = 0, f5_bad = 0, f5_done = 0, f4_bad = 0, f4_done = 0;
  for (std::size_t n = 0; n < plan.tuples; ++n) {
    const Triple tr = sample_times(times, rng);
    double x = sample_x(plan, rng);
    double y = sample_x(plan, rng);
    if (y < x) std::swap(x, y);
    try {
      const double mid = evaluate(f, {tr.r, x, tr.s});
      const double lhs = evaluate(f, {tr.s, mid, tr.t});
      const double rhs = evaluate(f, {tr.r, x, tr.t});
      ++f1_done;
      if (lhs != rhs) ++f1_bad;
    } catch (...) {
      if (!in_domain_error(std::current_exception())) throw;
    }
    try {
      const double fx = evaluate(f, {tr.s, x, tr.t});
      const double fy = evaluate(f, {tr.s, y, tr.t});
      ++f5_done;
      if (fx > fy) ++f5_bad;
    } catch (...) {
      if (!in_domain_error(std::current_exception())) throw;
    }
    if (tr.s < tr.t) {
      try {
        const EvalQuery q{tr.s, x, tr.t};
        const double v = evaluate(f, q);
        ++f4_done;
        if (!has_fresh_origin(f, q, v)) ++f4_bad;
      } catch (...) {
        if (!in_domain_error(std::current_exception())) throw;
      }
    }
  }

  std::vector<TestReport> out;
  TestReport f1 = make_report("F1 composition", Rule::Equal, static_cast<double>(f1_bad), 0.0);
  f1.replicas = f1_done;
  f1.notes = "violations of f(s, f(r,x;s); t) == f(r,x;t), exact";
  out.push_back(f1);

  // F2: range density inside the interior window.
  const double width = plan.x_hi - plan.x_lo;
  const double in_lo = plan.x_lo + plan.interior_margin * width;
  const double in_hi = plan.x_hi - plan.interior_margin * width;
  const RangeLattice lattice{plan.x_lo, plan.x_hi, plan.spacing};
  double worst_gap = 0.0;
  std::size_t f2_done = 0;
  {
    std::vector<double> eligible;
    for (double s : times) {
      if (s >= times.front() + plan.warmup - 1e-12) eligible.push_back(s);
    }
    constexpr std::size_t kF2Times = 64;
    const std::size_t stride = std::max<std::size_t>(1, eligible.size() / kF2Times);
    for (std::size_t i = 0; i < eligible.size(); i += stride) {
      try {
        const auto range = range_at(f, eligible[i], lattice);
        worst_gap = std::max(worst_gap, max_gap_in(range, in_lo, in_hi));
        ++f2_done;
      } catch (...) {
        if (!in_domain_error(std::current_exception())) throw;
      }
    }
  }
  TestReport f2 = make_report("F2 range density", Rule::AtMost, worst_gap, plan.density_tolerance);
  f2.replicas = f2_done;
  f2.notes = "max gap of the range in the interior window; finite-grid density tolerance";
  out.push_back(f2);

  // F3: right-continuity surrogate at fresh lattice points.
  double step_sum = 0.0;
  double step_max = 0.0;
  std::size_t f3_done = 0;
  {
    const std::size_t pairs = std::min<std::size_t>(plan.tuples, 200);
    const double probe = plan.spacing * 0x1p-30;
    for (std::size_t n = 0; n < pairs; ++n) {
      const Triple tr = sample_times(times, rng);
      if (!(tr.s < tr.t)) continue;
      for (double x = in_lo; x <= in_hi; x += plan.spacing) {
        try {
          if (!is_fresh(f, tr.s, x)) continue;
          const double step =
              std::abs(evaluate(f, {tr.s, x + probe, tr.t}) - evaluate(f, {tr.s, x, tr.t}));
          step_sum += step;
          step_max = std::max(step_max, step);
          ++f3_done;
        } catch (...) {
          if (!in_domain_error(std::current_exception())) throw;
        }
      }
    }
  }
  const double step_mean = f3_done ? step_sum / static_cast<double>(f3_done) : 0.0;
  TestReport f3 = make_report("F3 right continuity at fresh points", Rule::AtMost, step_mean,
                              plan.continuity_tolerance);
  f3.replicas = f3_done;
  {
    std::ostringstream notes;
    notes << "mean step to x + spacing*2^-30 over fresh lattice points (max " << step_max
          << "); finite-lattice surrogate for right-continuity";
    f3.notes = notes.str();
  }
  out.push_back(f3);

  TestReport f4 = make_report("F4 fresh origins", Rule::Equal, static_cast<double>(f4_bad), 0.0);
  f4.replicas = f4_done;
  f4.notes = "evaluations not carried by a trajectory started at a fresh point";
  out.push_back(f4);

  TestReport f5 = make_report("F5 monotone", Rule::Equal, static_cast<double>(f5_bad), 0.0);
  f5.replicas = f5_done;
  f5.notes = "violations of x <= y => f(s,x;t) <= f(s,y;t), exact";
  out.push_back(f5);
  return out;
}

TestReport check_cocycle(const FlowElement& f, std::span<const double> times, double x_lo,
                         double x_hi, std::size_t samples, std::uint64_t seed) {
  if (times.empty()) throw InvalidArgument("cocycle check needs candidate times");
  RngStream rng(seed);
  const double top = *std::max_element(times.begin(), times.end());
  const auto pick = [&] {
    return times[std::min<std::size_t>(times.size() - 1,
                                       static_cast<std::size_t>(rng.uniform() * times.size()))];
  };
  std::size_t bad = 0, done = 0, attempts = 0;
  while (done < samples && attempts < 20 * samples) {
    ++attempts;
    const double s = pick();
    const double t = pick();
    if (s < 0.0 || t < 0.0 || s + t > top) continue;
    const double x = x_lo + (x_hi - x_lo) * rng.uniform();
    try {
      const double lhs = cocycle(t + s, f, x);
      const double rhs = cocycle(t, shift(f, s), cocycle(s, f, x));
      ++done;
      if (lhs != rhs) ++bad;
    } catch (...) {
      if (!in_domain_error(std::current_exception())) throw;
    }
  }
  TestReport r = make_report("cocycle identity", Rule::Equal, static_cast<double>(bad), 0.0);
  r.replicas = done;
  r.notes = "violations of phi(t+s,x) == phi(t, theta_s, phi(s,x)), exact";
  return r;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const FlowElement& f, std::span<const EvalQuery> queries) {
  out << "s,x,t,value,trajectory_id\n";
  for (const EvalQuery& q : queries) {
    Evaluation e;
    try {
      e = evaluate_traced(f, q);
    } catch (const InvalidArgument&) {
      continue;
    } catch (...) {
      if (!in_domain_error(std::current_exception())) throw;
      continue;
    }
    out << format_double(q.s) << ',' << format_double(q.x) << ',' << format_double(q.t) << ','
        << format_double(e.value) << ',';
    if (e.trajectory) out << *e.trajectory;
    out << '\n';
  }
}

}  // namespace coalflow
