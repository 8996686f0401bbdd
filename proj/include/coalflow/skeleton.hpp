#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "coalflow/motion.hpp"
#include "coalflow/report.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

/// Finite space-time grid of starting points: every start time carries a
/// full copy of the space lattice {lo, lo + spacing, ..., hi}.
struct SkeletonConfig {
  double window_lo = 0.0;
  double window_hi = 1.0;
  double spacing = 1.0 / 64.0;
  std::vector<double> start_times{0.0};
  double dt = 1e-3;
  double t0 = 0.0;
  double t1 = 1.0;
  MotionModel model = DiffusionSpec::arratia();
  /// Density tolerance for range checks; 0 selects 8 * spacing.
  double density_tolerance = 0.0;
  /// Negative-control hook: every trajectory gets the extra drift
  /// injected_time_drift * t, which breaks time-shift invariance.
  double injected_time_drift = 0.0;

  /// Throws ConfigError on inconsistent parameters.
  void validate() const;

  [[nodiscard]] std::size_t lattice_size() const;
  [[nodiscard]] double lattice_point(std::size_t i) const;
  [[nodiscard]] std::size_t time_steps() const;
  [[nodiscard]] double step() const;
  [[nodiscard]] double grid_time(std::size_t k) const;
  /// Grid index of t if t lies on the time grid inside [t0, t1].
  [[nodiscard]] std::optional<std::size_t> grid_index(double t) const;
  [[nodiscard]] double epsilon_density() const;

  /// Evenly spaced times from `from` to `to` inclusive.
  static std::vector<double> every(double from, double to, double spacing);
};

/// Coalescing trajectories started from every grid point. Trajectory ids are
/// start_index * lattice_size + lattice_index. Merged trajectories share the
/// storage of their union-find representative from the merge step onwards.
class SkeletonFlow {
 public:
  static constexpr std::uint32_t kNever = std::numeric_limits<std::uint32_t>::max();

  struct Trajectory {
    double start_value = 0.0;
    std::uint32_t activation = 0;       // grid step of the start time
    std::uint32_t merge_step = kNever;  // first step at which it reads its parent
    std::uint32_t merged_into = kNever;
  };

  SkeletonFlow() = default;

  [[nodiscard]] const SkeletonConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::size_t time_steps() const { return config_.time_steps(); }
  [[nodiscard]] double time(std::size_t k) const { return config_.grid_time(k); }
  [[nodiscard]] std::size_t trajectory_count() const { return trajectories_.size(); }
  [[nodiscard]] const Trajectory& trajectory(std::size_t id) const { return trajectories_[id]; }
  [[nodiscard]] std::size_t trajectory_id(std::size_t start_index, std::size_t lattice_index) const;

  /// Y_id at grid step k; the start value before activation.
  [[nodiscard]] double position(std::size_t id, std::size_t k) const;
  /// Id whose storage holds Y_id at step k (id itself before activation).
  [[nodiscard]] std::size_t representative(std::size_t id, std::size_t k) const;

  /// Class representatives alive at step k, sorted by position.
  [[nodiscard]] std::span<const std::uint32_t> live(std::size_t k) const;

  /// Positions at step k of classes containing a trajectory started before
  /// step k, sorted.
  [[nodiscard]] std::vector<double> range_at_step(std::size_t k) const;

  /// Number of position values actually stored.
  [[nodiscard]] std::size_t stored_values() const;

  /// Grid step of s; throws OffGridTime / OutOfHorizon.
  [[nodiscard]] std::size_t step_of(double s) const;

 private:
  friend SkeletonFlow build_skeleton(const SkeletonConfig&, const RngStream&);
  friend class SkeletonSnapshotCodec;

  SkeletonConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<Trajectory> trajectories_;
  std::vector<std::vector<double>> own_;  // own_[id][k - activation]
  std::vector<std::uint32_t> live_ids_;
  std::vector<std::size_t> live_offsets_;  // size time_steps() + 2
};

/// Injects the lattice at each start time into the running coalescing
/// system; trajectories are frozen at their start value until activation.
/// Step k of the dynamics draws from rng.substream(k).
SkeletonFlow build_skeleton(const SkeletonConfig& config, const RngStream& rng);

/// (trajectory id, position) for every class alive at time s, sorted.
std::vector<std::pair<std::size_t, double>> positions_at(const SkeletonFlow& skeleton, double s);

struct SpCheckOptions {
  double warmup = 0.01;         // density is checked at times >= t0 + warmup
  double interior_margin = 0.25;  // fraction of the window cut on each side
  std::size_t time_samples = 32;
  std::size_t sp4_samples = 64;
  std::size_t sp5_samples = 64;
  std::size_t sp5_ladder = 4;
};

/// SP1-SP5 on a built skeleton; failures are reported, never thrown.
std::vector<TestReport> check_sp_properties(const SkeletonFlow& skeleton,
                                            const SpCheckOptions& options = {});

/// Largest gap of sorted `points` inside [lo, hi], counting the two ends.
double max_gap_in(std::span<const double> points, double lo, double hi);

}  // namespace coalflow
