#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coalflow/rng.hpp"

namespace coalflow {

// ---------------------------------------------------------------------------
// Model specifications
// ---------------------------------------------------------------------------

struct Arratia {};

struct OrnsteinUhlenbeck {
  double rate = 1.0;        // lambda > 0
  double volatility = 1.0;  // sigma > 0
};

struct GenericDiffusion {
  std::function<double(double)> drift;
  std::function<double(double)> diffusion;
  double lipschitz_bound = 0.0;
};

/// One-point dynamics dX = a(X) dt + b(X) dW of each trajectory before it
/// meets another one.
class DiffusionSpec {
 public:
  using Kind = std::variant<Arratia, OrnsteinUhlenbeck, GenericDiffusion>;

  DiffusionSpec() : kind_(Arratia{}) {}
  static DiffusionSpec arratia() { return DiffusionSpec(Arratia{}); }
  static DiffusionSpec ornstein_uhlenbeck(double rate, double volatility);
  static DiffusionSpec generic(std::function<double(double)> drift,
                               std::function<double(double)> diffusion, double lipschitz_bound);

  [[nodiscard]] double drift(double x) const;
  [[nodiscard]] double diffusion(double x) const;
  [[nodiscard]] const Kind& kind() const { return kind_; }
  [[nodiscard]] bool is_arratia() const { return std::holds_alternative<Arratia>(kind_); }
  [[nodiscard]] std::string name() const;

  /// Throws NonPositiveDiffusion unless b > 0 at `samples` evenly spaced
  /// points of [lo, hi].
  void require_positive_diffusion(double lo, double hi, int samples = 1025) const;

 private:
  explicit DiffusionSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// Harris flow: Brownian trajectories with d<w_x, w_y> = Gamma(w_x - w_y) dt.
struct HarrisSpec {
  enum class Family { Exponential };

  Family family = Family::Exponential;
  double gamma = 1.0;
  /// Clusters closer than this after a step are merged.
  double merge_gap = 1e-6;

  /// Gamma(x).
  [[nodiscard]] double correlation(double x) const;
  /// Lower bound beta with 1 - Gamma(x) >= beta(x) on (0, 1].
  [[nodiscard]] double beta(double x) const;
  [[nodiscard]] std::string name() const;
};

struct HarrisConditionCheck {
  bool normalized = false;   // Gamma(0) == 1
  bool bounded = false;      // |Gamma| <= 1 on the sample grid
  bool even = false;         // Gamma(-x) == Gamma(x) on the sample grid
  bool beta_bound = false;   // 1 - Gamma >= beta on (0, 1]
  double integral = 0.0;     // int_0^eps x / beta(x) dx
  [[nodiscard]] bool ok() const { return normalized && bounded && even && beta_bound; }
};

HarrisConditionCheck check_harris_conditions(const HarrisSpec& spec, double eps = 1.0);

using MotionModel = std::variant<DiffusionSpec, HarrisSpec>;

std::string model_name(const MotionModel& model);

// ---------------------------------------------------------------------------
// Coalescing particle state
// ---------------------------------------------------------------------------

struct MergeEvent {
  std::size_t survivor = 0;  // representative particle kept
  std::size_t absorbed = 0;  // representative particle that stops being one
  double time = 0.0;
};

/// Time-stamped coalescing particle system. Clusters are stored once, sorted
/// by position; each cluster is named by its representative particle.
class SystemState {
 public:
  SystemState() = default;

  /// Starts must be sorted nondecreasing; equal starts share one cluster.
  static SystemState from_starts(std::span<const double> starts, double time = 0.0);

  /// Adds one particle at x. A particle landing exactly on a cluster joins it.
  std::size_t add_particle(double x);

  /// Adds sorted particles in one pass. Returns the index of the first one.
  std::size_t add_particles(std::span<const double> sorted_xs);

  [[nodiscard]] double time() const { return time_; }
  [[nodiscard]] std::span<const double> positions() const { return positions_; }
  [[nodiscard]] std::span<const std::size_t> cluster_ids() const { return reps_; }
  [[nodiscard]] std::size_t cluster_count() const { return positions_.size(); }
  [[nodiscard]] std::size_t particle_count() const { return parent_.size(); }
  [[nodiscard]] const std::vector<MergeEvent>& merge_log() const { return merge_log_; }

  /// Representative particle of the cluster containing `particle`.
  [[nodiscard]] std::size_t cluster_of(std::size_t particle) const;
  [[nodiscard]] double position_of(std::size_t particle) const;
  [[nodiscard]] std::size_t cluster_size(std::size_t particle) const;

  /// True when positions are strictly increasing and the bookkeeping agrees.
  [[nodiscard]] bool invariants_hold() const;

  /// Moves every cluster to `proposed` (same order as positions()) and
  /// advances the clock by dt. `hit[i]` forces clusters i and i+1 to merge.
  /// Crossings are always converted into merges; a merged group takes the
  /// proposed position of one of its members chosen uniformly.
  void apply_step(double dt, std::span<const double> proposed, std::span<const char> hit,
                  RngStream& rng);

 private:
  std::size_t find(std::size_t particle) const;
  std::size_t unite(std::size_t rep_a, std::size_t rep_b, double time);
  void rebuild_slots();

  double time_ = 0.0;
  std::vector<double> positions_;
  std::vector<std::size_t> reps_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> slot_;  // slot of each representative in positions_
  std::vector<MergeEvent> merge_log_;
};

// ---------------------------------------------------------------------------
// Analytic quantities
// ---------------------------------------------------------------------------

/// m(x) = int_0^x exp(-2 int_0^y a/b^2 dz) dy by adaptive Simpson.
double scale_function(const DiffusionSpec& spec, double x);

/// m'(x) = exp(-2 int_0^x a/b^2 dz).
double scale_derivative(const DiffusionSpec& spec, double x);

/// Upper bound on P(two independent copies from x, y stay in [c, c_hi] and
/// never meet on [0, t]): |m(y) - m(x)| / (sqrt(pi t) * delta) with delta the
/// minimum of m' b over the box. For Arratia this is |y - x| / sqrt(pi t).
double meeting_bound(const DiffusionSpec& spec, double x, double y, double c, double c_hi,
                     double t);

/// erf((y - x) / (2 sqrt t)): two independent standard Brownian motions from
/// x <= y have not met by time t.
double pair_no_meet_probability_exact(double x, double y, double t);

/// exp(-2 d0 d1 / (variance_rate dt)): a Brownian bridge of the given
/// variance rate from d0 > 0 to d1 > 0 touches zero inside the step.
double bridge_cross_probability(double d0, double d1, double dt, double variance_rate);

// ---------------------------------------------------------------------------
// Steppers
// ---------------------------------------------------------------------------

/// Euler-Maruyama step of independent diffusions with exact (Arratia) or
/// frozen-coefficient bridge detection of meetings between neighbours.
/// `extra_drift` is added to every cluster's drift for this step.
void advance_diffusions(const DiffusionSpec& spec, SystemState& state, double dt,
                        RngStream& rng, double extra_drift = 0.0);

SystemState step_coalescing_diffusions(const DiffusionSpec& spec, const SystemState& state,
                                       double dt, RngStream& rng);

/// Joint Gaussian step with covariance Gamma(x_i - x_j) dt.
void advance_harris(const HarrisSpec& spec, SystemState& state, double dt, RngStream& rng,
                    double extra_drift = 0.0);

SystemState step_harris(const HarrisSpec& spec, const SystemState& state, double dt,
                        RngStream& rng);

void advance(const MotionModel& model, SystemState& state, double dt, RngStream& rng,
             double extra_drift = 0.0);

/// Number of steps used to cover `horizon` with steps no longer than dt.
std::size_t step_count(double horizon, double dt);

/// Full trajectory of the n-point motion: element k is the state after k
/// steps of length horizon / step_count(horizon, dt). Step k draws from
/// rng.substream(k).
std::vector<SystemState> sample_npoint_motion(const MotionModel& model,
                                              std::span<const double> starts, double horizon,
                                              double dt, const RngStream& rng);

/// Same dynamics as sample_npoint_motion, keeping only the final state.
SystemState simulate_endpoint(const MotionModel& model, std::span<const double> starts,
                              double horizon, double dt, const RngStream& rng);

}  // namespace coalflow
