#include "coalflow/motion.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "coalflow/errors.hpp"
#include "coalflow/quadrature.hpp"

namespace coalflow {

// ---------------------------------------------------------------------------
// DiffusionSpec / HarrisSpec
// ---------------------------------------------------------------------------

DiffusionSpec DiffusionSpec::ornstein_uhlenbeck(double rate, double volatility) {
  if (!(rate > 0.0) || !(volatility > 0.0)) {
    throw InvalidArgument("Ornstein-Uhlenbeck needs rate > 0 and volatility > 0");
  }
  return DiffusionSpec(OrnsteinUhlenbeck{rate, volatility});
}

DiffusionSpec DiffusionSpec::generic(std::function<double(double)> drift,
                                     std::function<double(double)> diffusion,
                                     double lipschitz_bound) {
  if (!drift || !diffusion) throw InvalidArgument("generic diffusion needs a and b");
  return DiffusionSpec(GenericDiffusion{std::move(drift), std::move(diffusion), lipschitz_bound});
}

double DiffusionSpec::drift(double x) const {
  return std::visit(
      [x](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Arratia>) {
          return 0.0;
        } else if constexpr (std::is_same_v<K, OrnsteinUhlenbeck>) {
          return -k.rate * x;
        } else {
          return k.drift(x);
        }
      },
      kind_);
}

double DiffusionSpec::diffusion(double x) const {
  return std::visit(
      [x](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Arratia>) {
          return 1.0;
        } else if constexpr (std::is_same_v<K, OrnsteinUhlenbeck>) {
          return k.volatility;
        } else {
          return k.diffusion(x);
        }
      },
      kind_);
}

std::string DiffusionSpec::name() const {
  std::ostringstream out;
  std::visit(
      [&out](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Arratia>) {
          out << "arratia";
        } else if constexpr (std::is_same_v<K, OrnsteinUhlenbeck>) {
          out << "ou(rate=" << k.rate << ",volatility=" << k.volatility << ")";
        } else {
          out << "generic";
        }
      },
      kind_);
  return out.str();
}

void DiffusionSpec::require_positive_diffusion(double lo, double hi, int samples) const {
  if (lo > hi) std::swap(lo, hi);
  const int n = std::max(samples, 2);
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double b = diffusion(x);
    if (!(b > 0.0)) {
      std::ostringstream msg;
      msg << "diffusion coefficient " << b << " is not positive at x = " << x;
      throw NonPositiveDiffusion(msg.str());
    }
  }
}

double HarrisSpec::correlation(double x) const { return std::exp(-gamma * std::abs(x)); }

double HarrisSpec::beta(double x) const { return (1.0 - std::exp(-gamma)) * x; }

std::string HarrisSpec::name() const {
  std::ostringstream out;
  out << "harris(exponential,gamma=" << gamma << ")";
  return out.str();
}

HarrisConditionCheck check_harris_conditions(const HarrisSpec& spec, double eps) {
  HarrisConditionCheck check;
  check.normalized = spec.correlation(0.0) == 1.0;
  check.bounded = true;
  check.even = true;
  check.beta_bound = true;
  constexpr int kGrid = 4096;
  for (int i = 1; i <= kGrid; ++i) {
    const double x = 8.0 * i / kGrid;
    const double g = spec.correlation(x);
    if (std::abs(g) > 1.0) check.bounded = false;
    if (spec.correlation(-x) != g) check.even = false;
  }
  for (int i = 1; i <= kGrid; ++i) {
    const double x = static_cast<double>(i) / kGrid;
    // Rounding slack of a few ulps near x = 1 where the two sides touch.
    if (1.0 - spec.correlation(x) < spec.beta(x) - 4e-16) check.beta_bound = false;
  }
  check.integral =
      adaptive_simpson([&spec](double x) { return x > 0.0 ? x / spec.beta(x) : 1.0 / spec.beta(1.0); },
                       0.0, eps);
  return check;
}

std::string model_name(const MotionModel& model) {
  return std::visit([](const auto& m) { return m.name(); }, model);
}

// ---------------------------------------------------------------------------
// SystemState
// ---------------------------------------------------------------------------

SystemState SystemState::from_starts(std::span<const double> starts, double time) {
  if (!std::is_sorted(starts.begin(), starts.end())) {
    throw InvalidArgument("starting points must be sorted");
  }
  SystemState state;
  state.time_ = time;
  state.add_particles(starts);
  return state;
}

std::size_t SystemState::find(std::size_t particle) const {
  while (parent_[particle] != particle) particle = parent_[particle];
  return particle;
}

std::size_t SystemState::cluster_of(std::size_t particle) const {
  if (particle >= parent_.size()) throw InvalidArgument("unknown particle index");
  return find(particle);
}

double SystemState::position_of(std::size_t particle) const {
  return positions_[slot_[cluster_of(particle)]];
}

std::size_t SystemState::cluster_size(std::size_t particle) const {
  return size_[cluster_of(particle)];
}

std::size_t SystemState::unite(std::size_t rep_a, std::size_t rep_b, double time) {
  std::size_t survivor = rep_a;
  std::size_t absorbed = rep_b;
  if (size_[absorbed] > size_[survivor] ||
      (size_[absorbed] == size_[survivor] && absorbed < survivor)) {
    std::swap(survivor, absorbed);
  }
  parent_[absorbed] = survivor;
  size_[survivor] += size_[absorbed];
  merge_log_.push_back({survivor, absorbed, time});
  return survivor;
}

void SystemState::rebuild_slots() {
  slot_.resize(parent_.size());
  for (std::size_t i = 0; i < reps_.size(); ++i) slot_[reps_[i]] = i;
}

std::size_t SystemState::add_particle(double x) {
  const double xs[1] = {x};
  return add_particles(xs);
}

std::size_t SystemState::add_particles(std::span<const double> sorted_xs) {
  if (!std::is_sorted(sorted_xs.begin(), sorted_xs.end())) {
    throw InvalidArgument("add_particles expects sorted positions");
  }
  const std::size_t first = parent_.size();
  if (sorted_xs.empty()) return first;

  std::vector<double> positions;
  std::vector<std::size_t> reps;
  positions.reserve(positions_.size() + sorted_xs.size());
  reps.reserve(positions.capacity());

  std::size_t i = 0;
  for (std::size_t j = 0; j < sorted_xs.size(); ++j) {
    const double x = sorted_xs[j];
    if (!std::isfinite(x)) throw InvalidArgument("particle position must be finite");
    while (i < positions_.size() && positions_[i] < x) {
      positions.push_back(positions_[i]);
      reps.push_back(reps_[i]);
      ++i;
    }
    const std::size_t id = parent_.size();
    parent_.push_back(id);
    size_.push_back(1);
    if (i < positions_.size() && positions_[i] == x) {
      // Lands on an existing cluster: emit it and absorb the newcomer.
      positions.push_back(positions_[i]);
      reps.push_back(reps_[i]);
      ++i;
    }
    if (!positions.empty() && positions.back() == x) {
      reps.back() = unite(reps.back(), id, time_);
    } else {
      positions.push_back(x);
      reps.push_back(id);
    }
  }
  for (; i < positions_.size(); ++i) {
    positions.push_back(positions_[i]);
    reps.push_back(reps_[i]);
  }
  positions_ = std::move(positions);
  reps_ = std::move(reps);
  rebuild_slots();
  return first;
}

bool SystemState::invariants_hold() const {
  if (positions_.size() != reps_.size()) return false;
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (i > 0 && !(positions_[i - 1] < positions_[i])) return false;
    if (parent_[reps_[i]] != reps_[i] || slot_[reps_[i]] != i) return false;
  }
  std::size_t roots = 0;
  for (std::size_t p = 0; p < parent_.size(); ++p) roots += parent_[p] == p;
  return roots == reps_.size();
}

void SystemState::apply_step(double dt, std::span<const double> proposed,
                             std::span<const char> hit, RngStream& rng) {
  const std::size_t n = positions_.size();
  assert(proposed.size() == n);
  assert(n == 0 || hit.size() + 1 >= n);
  const double new_time = time_ + dt;

  struct Group {
    std::size_t lo, hi;  // inclusive slot range in the pre-step order
    double pos;
  };
  std::vector<Group> stack;
  stack.reserve(n);

  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo;
    while (hi + 1 < n && (hit[hi] || !(proposed[hi] < proposed[hi + 1]))) ++hi;
    double pos = proposed[lo];
    if (hi > lo) {
      const auto span = hi - lo + 1;
      auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(span));
      pos = proposed[lo + std::min(pick, span - 1)];
    }
    Group g{lo, hi, pos};
    // Crossing implies merging: fold into the previous group until the
    // surviving positions are strictly increasing again.
    while (!stack.empty() && !(stack.back().pos < g.pos)) {
      const Group& prev = stack.back();
      const double w_prev = static_cast<double>(prev.hi - prev.lo + 1);
      const double w_cur = static_cast<double>(g.hi - g.lo + 1);
      const double pos_merged = rng.uniform() * (w_prev + w_cur) < w_prev ? prev.pos : g.pos;
      g = Group{prev.lo, g.hi, pos_merged};
      stack.pop_back();
    }
    stack.push_back(g);
    lo = hi + 1;
  }

  std::vector<double> positions;
  std::vector<std::size_t> reps;
  positions.reserve(stack.size());
  reps.reserve(stack.size());
  for (const Group& g : stack) {
    std::size_t rep = reps_[g.lo];
    for (std::size_t s = g.lo + 1; s <= g.hi; ++s) rep = unite(rep, reps_[s], new_time);
    positions.push_back(g.pos);
    reps.push_back(rep);
  }
  positions_ = std::move(positions);
  reps_ = std::move(reps);
  time_ = new_time;
  rebuild_slots();
}

// ---------------------------------------------------------------------------
// Analytic quantities
// ---------------------------------------------------------------------------

namespace {

// int_0^y a/b^2 dz.
double drift_ratio_integral(const DiffusionSpec& spec, double y) {
  if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&spec.kind())) {
    // Closed form is cheaper and exact; the quadrature path is used for generic specs.
    return -ou->rate * y * y / (2.0 * ou->volatility * ou->volatility);
  }
  return adaptive_simpson(
      [&spec](double z) {
        const double b = spec.diffusion(z);
        if (!(b > 0.0)) {
          std::ostringstream msg;
          msg << "diffusion coefficient " << b << " is not positive at x = " << z;
          throw NonPositiveDiffusion(msg.str());
        }
        return spec.drift(z) / (b * b);
      },
      0.0, y, 1e-12);
}

}  // namespace

double scale_derivative(const DiffusionSpec& spec, double x) {
  if (spec.is_arratia()) return 1.0;
  return std::exp(-2.0 * drift_ratio_integral(spec, x));
}

double scale_function(const DiffusionSpec& spec, double x) {
  if (spec.is_arratia() || x == 0.0) return x;
  const double lo = std::min(0.0, x);
  const double hi = std::max(0.0, x);
  if (!(spec.diffusion(lo) > 0.0) || !(spec.diffusion(hi) > 0.0)) {
    throw NonPositiveDiffusion("diffusion coefficient is not positive on the integration range");
  }
  return adaptive_simpson([&spec](double y) { return scale_derivative(spec, y); }, 0.0, x, 1e-10);
}

double meeting_bound(const DiffusionSpec& spec, double x, double y, double c, double c_hi,
                     double t) {
  if (t <= 0.0) throw NegativeDuration("meeting_bound needs t > 0");
  if (c > c_hi) throw InvalidArgument("meeting_bound needs c <= c'");
  if (x == y) return 0.0;
  double delta = 1.0;
  if (!spec.is_arratia()) {
    constexpr int kGrid = 2048;
    delta = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kGrid; ++i) {
      const double z = c + (c_hi - c) * i / kGrid;
      delta = std::min(delta, scale_derivative(spec, z) * spec.diffusion(z));
    }
    if (!(delta > 0.0)) throw NonPositiveDiffusion("m' b vanishes inside the box");
  }
  const double dm = std::abs(scale_function(spec, y) - scale_function(spec, x));
  return dm / (std::sqrt(std::numbers::pi * t) * delta);
}

double pair_no_meet_probability_exact(double x, double y, double t) {
  if (t < 0.0 || std::isnan(t)) throw NegativeDuration("no-meet probability needs t >= 0");
  const double gap = std::abs(y - x);
  if (gap == 0.0) return 0.0;
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return std::erf(gap / (2.0 * std::sqrt(t)));
}

double bridge_cross_probability(double d0, double d1, double dt, double variance_rate) {
  if (!(d0 > 0.0) || !(d1 > 0.0)) throw InvalidGap("bridge gaps must be positive");
  if (!(dt > 0.0)) throw NegativeDuration("bridge step must be positive");
  if (!(variance_rate > 0.0)) throw InvalidArgument("variance rate must be positive");
  return std::exp(-2.0 * d0 * d1 / (variance_rate * dt));
}

// ---------------------------------------------------------------------------
// Steppers
// ---------------------------------------------------------------------------

namespace {

template <class Drift, class Diffusion>
void advance_independent(SystemState& state, double dt, RngStream& rng, double extra_drift,
                         bool exact_rate, Drift&& drift, Diffusion&& diffusion) {
  const auto pos = state.positions();
  const std::size_t n = pos.size();
  const double sqrt_dt = std::sqrt(dt);
  std::vector<double> proposed(n);
  std::vector<double> vol(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = diffusion(pos[i]);
    if (!(b > 0.0)) throw NonPositiveDiffusion("diffusion coefficient must be positive");
    vol[i] = b;
    proposed[i] = pos[i] + (drift(pos[i]) + extra_drift) * dt + b * sqrt_dt * rng.normal();
  }
  std::vector<char> hit(n > 0 ? n - 1 : 0, 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d1 = proposed[i + 1] - proposed[i];
    if (d1 <= 0.0) continue;
    const double d0 = pos[i + 1] - pos[i];
    const double rate = exact_rate ? 2.0 : vol[i] * vol[i] + vol[i + 1] * vol[i + 1];
    hit[i] = rng.uniform() < std::exp(-2.0 * d0 * d1 / (rate * dt));
  }
  state.apply_step(dt, proposed, hit, rng);
}

}  // namespace

void advance_diffusions(const DiffusionSpec& spec, SystemState& state, double dt, RngStream& rng,
                        double extra_drift) {
  if (!(dt > 0.0)) throw NegativeDuration("time step must be positive");
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Arratia>) {
          advance_independent(
              state, dt, rng, extra_drift, true, [](double) { return 0.0; },
              [](double) { return 1.0; });
        } else if constexpr (std::is_same_v<K, OrnsteinUhlenbeck>) {
          const double rate = k.rate;
          const double vol = k.volatility;
          advance_independent(
              state, dt, rng, extra_drift, false, [rate](double x) { return -rate * x; },
              [vol](double) { return vol; });
        } else {
          advance_independent(state, dt, rng, extra_drift, false, k.drift, k.diffusion);
        }
      },
      spec.kind());
}

SystemState step_coalescing_diffusions(const DiffusionSpec& spec, const SystemState& state,
                                       double dt, RngStream& rng) {
  SystemState next = state;
  advance_diffusions(spec, next, dt, rng);
  return next;
}

void advance_harris(const HarrisSpec& spec, SystemState& state, double dt, RngStream& rng,
                    double extra_drift) {
  if (!(dt > 0.0)) throw NegativeDuration("time step must be positive");
  const auto pos = state.positions();
  const auto n = static_cast<Eigen::Index>(pos.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double c = spec.correlation(pos[i] - pos[j]) * dt;
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-12;
    llt.compute(cov);
    if (llt.info() != Eigen::Success) {
      throw CovarianceNotFactorizable("Harris covariance is not positive definite after jitter");
    }
  }
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  const Eigen::VectorXd incr = llt.matrixL() * z;

  std::vector<double> proposed(pos.size());
  for (Eigen::Index i = 0; i < n; ++i) proposed[i] = pos[i] + extra_drift * dt + incr(i);
  std::vector<char> hit(pos.empty() ? 0 : pos.size() - 1, 0);
  for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
    hit[i] = proposed[i + 1] - proposed[i] < spec.merge_gap;
  }
  state.apply_step(dt, proposed, hit, rng);
}

SystemState step_harris(const HarrisSpec& spec, const SystemState& state, double dt,
                        RngStream& rng) {
  SystemState next = state;
  advance_harris(spec, next, dt, rng);
  return next;
}

void advance(const MotionModel& model, SystemState& state, double dt, RngStream& rng,
             double extra_drift) {
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, DiffusionSpec>) {
          advance_diffusions(m, state, dt, rng, extra_drift);
        } else {
          advance_harris(m, state, dt, rng, extra_drift);
        }
      },
      model);
}

std::size_t step_count(double horizon, double dt) {
  if (!(dt > 0.0)) throw NegativeDuration("time step must be positive");
  if (horizon < 0.0) throw NegativeDuration("horizon must be nonnegative");
  if (horizon == 0.0) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)));
}

namespace {

SystemState initial_state(std::span<const double> starts) {
  if (starts.empty()) throw EmptyStarts("n-point motion needs at least one starting point");
  return SystemState::from_starts(starts, 0.0);
}

}  // namespace

std::vector<SystemState> sample_npoint_motion(const MotionModel& model,
                                              std::span<const double> starts, double horizon,
                                              double dt, const RngStream& rng) {
  const std::size_t steps = step_count(horizon, dt);
  std::vector<SystemState> path;
  path.reserve(steps + 1);
  path.push_back(initial_state(starts));
  const double h = steps ? horizon / static_cast<double>(steps) : 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    SystemState next = path.back();
    RngStream step_rng = rng.substream(k);
    advance(model, next, h, step_rng);
    path.push_back(std::move(next));
  }
  return path;
}

SystemState simulate_endpoint(const MotionModel& model, std::span<const double> starts,
                              double horizon, double dt, const RngStream& rng) {
  const std::size_t steps = step_count(horizon, dt);
  SystemState state = initial_state(starts);
  const double h = steps ? horizon / static_cast<double>(steps) : 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    RngStream step_rng = rng.substream(k);
    advance(model, state, h, step_rng);
  }
  return state;
}

}  // namespace coalflow
