#include "coalflow/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "coalflow/errors.hpp"

namespace coalflow {

namespace {

constexpr double kGridTolerance = 1e-6;  // in units of one time step

}  // namespace

// ---------------------------------------------------------------------------
// SkeletonConfig
// ---------------------------------------------------------------------------

void SkeletonConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("skeleton config: " + msg); };
  if (!(window_lo < window_hi)) fail("window must satisfy lo < hi");
  if (!(spacing > 0.0)) fail("spacing must be positive");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(t0 < t1)) fail("horizon must satisfy t0 < t1");
  if (!(density_tolerance >= 0.0)) fail("density tolerance must be nonnegative");
  if (!std::isfinite(injected_time_drift)) fail("injected drift must be finite");
  if (lattice_size() > (std::size_t{1} << 24)) fail("lattice is too large");
  for (std::size_t i = 0; i < start_times.size(); ++i) {
    if (i > 0 && !(start_times[i - 1] < start_times[i])) {
      fail("start times must be strictly increasing");
    }
    if (!grid_index(start_times[i])) {
      std::ostringstream msg;
      msg << "start time " << start_times[i] << " is not on the time grid";
      fail(msg.str());
    }
  }
  if (const auto* diff = std::get_if<DiffusionSpec>(&model)) {
    diff->require_positive_diffusion(window_lo, window_hi);
  }
}

std::size_t SkeletonConfig::lattice_size() const {
  return static_cast<std::size_t>(std::floor((window_hi - window_lo) / spacing + 1e-9)) + 1;
}

double SkeletonConfig::lattice_point(std::size_t i) const {
  return window_lo + static_cast<double>(i) * spacing;
}

std::size_t SkeletonConfig::time_steps() const { return step_count(t1 - t0, dt); }

double SkeletonConfig::step() const { return (t1 - t0) / static_cast<double>(time_steps()); }

double SkeletonConfig::grid_time(std::size_t k) const {
  return t0 + static_cast<double>(k) * step();
}

std::optional<std::size_t> SkeletonConfig::grid_index(double t) const {
  const double r = (t - t0) / step();
  const double k = std::round(r);
  if (!(std::abs(r - k) <= kGridTolerance)) return std::nullopt;
  if (k < 0.0 || k > static_cast<double>(time_steps())) return std::nullopt;
  return static_cast<std::size_t>(k);
}

double SkeletonConfig::epsilon_density() const {
  return density_tolerance > 0.0 ? density_tolerance : 8.0 * spacing;
}

std::vector<double> SkeletonConfig::every(double from, double to, double spacing) {
  if (!(spacing > 0.0) || to < from) throw ConfigError("invalid start-time ladder");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / spacing + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(from + static_cast<double>(i) * spacing);
  return out;
}

// ---------------------------------------------------------------------------
// SkeletonFlow
// ---------------------------------------------------------------------------

std::size_t SkeletonFlow::trajectory_id(std::size_t start_index, std::size_t lattice_index) const {
  return start_index * config_.lattice_size() + lattice_index;
}

std::size_t SkeletonFlow::representative(std::size_t id, std::size_t k) const {
  if (k < trajectories_[id].activation) return id;
  std::size_t r = id;
  while (trajectories_[r].merge_step <= k) r = trajectories_[r].merged_into;
  return r;
}

double SkeletonFlow::position(std::size_t id, std::size_t k) const {
  const Trajectory& tr = trajectories_[id];
  if (k < tr.activation) return tr.start_value;
  const std::size_t r = representative(id, k);
  return own_[r][k - trajectories_[r].activation];
}

std::span<const std::uint32_t> SkeletonFlow::live(std::size_t k) const {
  return {live_ids_.data() + live_offsets_[k], live_offsets_[k + 1] - live_offsets_[k]};
}

std::vector<double> SkeletonFlow::range_at_step(std::size_t k) const {
  std::vector<double> out;
  for (const std::uint32_t id : live(k)) {
    if (trajectories_[id].activation < k) {
      out.push_back(own_[id][k - trajectories_[id].activation]);
    }
  }
  return out;
}

std::size_t SkeletonFlow::stored_values() const {
  std::size_t n = 0;
  for (const auto& v : own_) n += v.size();
  return n;
}

std::size_t SkeletonFlow::step_of(double s) const {
  const double r = (s - config_.t0) / config_.step();
  const auto steps = static_cast<double>(time_steps());
  if (!(r >= -kGridTolerance && r <= steps + kGridTolerance)) {
    std::ostringstream msg;
    msg << "time " << s << " is outside the skeleton horizon [" << config_.t0 << ", "
        << config_.t1 << "]";
    throw OutOfHorizon(msg.str());
  }
  const auto k = config_.grid_index(s);
  if (!k) {
    std::ostringstream msg;
    msg << "time " << s << " is not on the skeleton time grid";
    throw OffGridTime(msg.str());
  }
  return *k;
}

SkeletonFlow build_skeleton(const SkeletonConfig& config, const RngStream& rng) {
  config.validate();
  SkeletonFlow flow;
  flow.config_ = config;
  flow.seed_ = rng.seed();

  const std::size_t steps = config.time_steps();
  const std::size_t lattice_n = config.lattice_size();
  std::vector<double> lattice(lattice_n);
  for (std::size_t i = 0; i < lattice_n; ++i) lattice[i] = config.lattice_point(i);

  std::vector<std::size_t> start_steps;
  for (double s : config.start_times) start_steps.push_back(*config.grid_index(s));

  flow.trajectories_.reserve(start_steps.size() * lattice_n);
  flow.own_.reserve(start_steps.size() * lattice_n);
  flow.live_offsets_.reserve(steps + 2);
  flow.live_offsets_.push_back(0);

  const double h = config.step();
  SystemState state = SystemState::from_starts({}, config.t0);
  std::size_t seen_events = 0;
  std::size_t next_start = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    if (next_start < start_steps.size() && start_steps[next_start] == k) {
      state.add_particles(lattice);
      for (std::size_t i = 0; i < lattice_n; ++i) {
        flow.trajectories_.push_back({lattice[i], static_cast<std::uint32_t>(k)});
        flow.own_.emplace_back();
      }
      ++next_start;
    }
    const auto& log = state.merge_log();
    for (; seen_events < log.size(); ++seen_events) {
      auto& tr = flow.trajectories_[log[seen_events].absorbed];
      tr.merge_step = static_cast<std::uint32_t>(k);
      tr.merged_into = static_cast<std::uint32_t>(log[seen_events].survivor);
    }
    const auto pos = state.positions();
    const auto ids = state.cluster_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      flow.own_[ids[i]].push_back(pos[i]);
      flow.live_ids_.push_back(static_cast<std::uint32_t>(ids[i]));
    }
    flow.live_offsets_.push_back(flow.live_ids_.size());
    if (k < steps) {
      RngStream step_rng = rng.substream(k);
      advance(config.model, state, h, step_rng, config.injected_time_drift * config.grid_time(k));
    }
  }
  return flow;
}

std::vector<std::pair<std::size_t, double>> positions_at(const SkeletonFlow& skeleton, double s) {
  const std::size_t k = skeleton.step_of(s);
  std::vector<std::pair<std::size_t, double>> out;
  for (const std::uint32_t id : skeleton.live(k)) out.emplace_back(id, skeleton.position(id, k));
  return out;
}

double max_gap_in(std::span<const double> points, double lo, double hi) {
  double prev = lo;
  double gap = 0.0;
  for (const double p : points) {
    if (p < lo) continue;
    if (p > hi) break;
    gap = std::max(gap, p - prev);
    prev = p;
  }
  return std::max(gap, hi - prev);
}

// ---------------------------------------------------------------------------
// SP1-SP5
// ---------------------------------------------------------------------------

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return out;
}

TestReport check_sp1(const SkeletonFlow& sk) {
  // A later starter must not land on a value already taken by the running system.
  std::size_t violations = 0;
  std::size_t checked = 0;
  std::size_t last_step = SkeletonFlow::kNever;
  std::vector<double> range;
  for (std::size_t id = 0; id < sk.trajectory_count(); ++id) {
    const auto& tr = sk.trajectory(id);
    if (tr.activation != last_step) {
      range = sk.range_at_step(tr.activation);
      last_step = tr.activation;
    }
    ++checked;
    if (std::binary_search(range.begin(), range.end(), tr.start_value)) ++violations;
  }
  TestReport r = make_report("SP1 fresh starting values", Rule::Equal,
                             static_cast<double>(violations), 0.0);
  r.replicas = checked;
  r.notes = "count of starters equal to an existing range value at their start time";
  return r;
}

TestReport check_sp2(const SkeletonFlow& sk) {
  const std::size_t steps = sk.time_steps();
  std::size_t violations = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const std::uint32_t id : sk.live(k)) {
      const auto& tr = sk.trajectory(id);
      if (tr.activation > k || tr.merge_step <= k) ++violations;  // never split
      const double p = sk.position(id, k);
      if (!(prev < p)) ++violations;  // classes have distinct positions
      prev = p;
    }
    if (k == steps) break;
    // Non-crossing: followed one step ahead, the order can only collapse.
    prev = -std::numeric_limits<double>::infinity();
    for (const std::uint32_t id : sk.live(k)) {
      const double p = sk.position(id, k + 1);
      if (p < prev) ++violations;
      prev = p;
    }
  }
  for (std::size_t id = 0; id < sk.trajectory_count(); ++id) {
    const auto& tr = sk.trajectory(id);
    if (tr.merge_step == SkeletonFlow::kNever) continue;
    for (const std::size_t k : {static_cast<std::size_t>(tr.merge_step), steps}) {
      if (sk.position(id, k) != sk.position(tr.merged_into, k)) ++violations;
    }
  }
  TestReport r = make_report("SP2 coalescence permanence", Rule::Equal,
                             static_cast<double>(violations), 0.0);
  r.replicas = sk.trajectory_count();
  r.notes = "split, duplicate-position, crossing and post-merge mismatch count";
  return r;
}

struct Interior {
  double lo, hi;
};

Interior interior_of(const SkeletonConfig& c, double margin) {
  const double w = c.window_hi - c.window_lo;
  return {c.window_lo + margin * w, c.window_hi - margin * w};
}

std::vector<std::size_t> sampled_steps(const SkeletonFlow& sk, double warmup, std::size_t n) {
  const std::size_t steps = sk.time_steps();
  std::size_t first = 0;
  while (first < steps && sk.time(first) < sk.config().t0 + warmup - 1e-12) ++first;
  std::vector<std::size_t> out;
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = first + (steps - first) * i / std::max<std::size_t>(1, n - 1);
    if (out.empty() || out.back() != k) out.push_back(std::min(k, steps));
  }
  return out;
}

TestReport check_sp3(const SkeletonFlow& sk, const SpCheckOptions& opt) {
  const Interior in = interior_of(sk.config(), opt.interior_margin);
  double worst = 0.0;
  const auto ks = sampled_steps(sk, opt.warmup, opt.time_samples);
  for (const std::size_t k : ks) {
    const auto range = sk.range_at_step(k);
    worst = std::max(worst, max_gap_in(range, in.lo, in.hi));
  }
  TestReport r = make_report("SP3 range density", Rule::AtMost, worst,
                             sk.config().epsilon_density());
  r.replicas = ks.size();
  std::ostringstream notes;
  notes << "max gap of the range inside [" << in.lo << ", " << in.hi
        << "] over sampled times >= t0 + " << opt.warmup << "; eps_d is an engineering tolerance";
  r.notes = notes.str();
  return r;
}

TestReport check_sp4(const SkeletonFlow& sk, const SpCheckOptions& opt) {
  const auto* spec = std::get_if<DiffusionSpec>(&sk.config().model);
  if (spec == nullptr) {
    return skipped_report("SP4 cluster count bound", "no scale function for Harris models");
  }
  const SkeletonConfig& c = sk.config();
  const Interior in = interior_of(c, opt.interior_margin);
  const std::size_t steps = sk.time_steps();
  const auto ks = sampled_steps(sk, opt.warmup, opt.sp4_samples + 1);
  std::vector<double> counts;
  std::vector<double> bounds;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::size_t s = ks[i];
    const std::size_t t = s + std::max<std::size_t>(1, (steps - s) / 2);
    if (t > steps) continue;
    constexpr int kParts = 4;
    const double w = (in.hi - in.lo) / kParts;
    const double a = in.lo + w * static_cast<double>(i % kParts);
    const double b = a + w;
    std::unordered_set<std::size_t> distinct;
    for (const std::uint32_t id : sk.live(s)) {
      const double y = sk.position(id, s);
      if (y > a && y < b) distinct.insert(sk.representative(id, t));
    }
    if (distinct.empty()) continue;
    counts.push_back(static_cast<double>(distinct.size()));
    bounds.push_back(1.0 + meeting_bound(*spec, a, b, c.window_lo, c.window_hi,
                                         sk.time(t) - sk.time(s)));
  }
  const MeanSe cnt = mean_se(counts);
  const MeanSe bnd = mean_se(bounds);
  TestReport r = make_report("SP4 cluster count bound", Rule::AtMostPlus3Se, cnt.mean, bnd.mean,
                             cnt.se);
  r.replicas = counts.size();
  r.notes = "mean distinct time-t values among classes inside (a,b) at s vs mean 1 + m(b) - m(a)";
  return r;
}

std::vector<TestReport> check_sp5(const SkeletonFlow& sk, const SpCheckOptions& opt) {
  const SkeletonConfig& c = sk.config();
  const std::size_t lattice_n = c.lattice_size();
  const std::size_t starts = c.start_times.size();
  const std::size_t steps = sk.time_steps();
  const std::size_t ladder = std::max<std::size_t>(1, opt.sp5_ladder);
  std::vector<double> first_rung;
  std::size_t non_monotone = 0;
  if (starts > 0 && lattice_n > ladder) {
    for (std::size_t n = 0; n < opt.sp5_samples; ++n) {
      const std::size_t j = n % starts;
      const std::size_t i = (n * 7919) % (lattice_n - ladder);
      const std::size_t base = sk.trajectory_id(j, i);
      const std::size_t from = sk.trajectory(base).activation;
      double prev = 0.0;
      for (std::size_t rung = 1; rung <= ladder; ++rung) {
        const std::size_t other = sk.trajectory_id(j, i + rung);
        double worst = 0.0;
        for (std::size_t k = from; k <= steps; ++k) {
          worst = std::max(worst, sk.position(other, k) - sk.position(base, k));
        }
        if (rung == 1) first_rung.push_back(worst);
        if (worst < prev) ++non_monotone;
        prev = worst;
      }
    }
  }
  std::vector<TestReport> out;
  TestReport mono = make_report("SP5 ladder monotone", Rule::Equal,
                                static_cast<double>(non_monotone), 0.0);
  mono.replicas = first_rung.size();
  mono.notes = "max separation must shrink as u' decreases to u";
  out.push_back(mono);
  const MeanSe m = mean_se(first_rung);
  TestReport modulus = make_report("SP5 right modulus", Rule::AtMost, m.mean,
                                   4.0 * c.spacing + 3.0 * std::sqrt(c.step()), m.se);
  modulus.replicas = first_rung.size();
  modulus.notes = "mean over sampled starts of max_t (Y_(p,u+dx) - Y_(p,u)); threshold 4dx + 3 sqrt(dt)";
  out.push_back(modulus);
  return out;
}

}  // namespace

std::vector<TestReport> check_sp_properties(const SkeletonFlow& skeleton,
                                            const SpCheckOptions& options) {
  std::vector<TestReport> out;
  out.push_back(check_sp1(skeleton));
  out.push_back(check_sp2(skeleton));
  out.push_back(check_sp3(skeleton, options));
  out.push_back(check_sp4(skeleton, options));
  for (auto& r : check_sp5(skeleton, options)) out.push_back(std::move(r));
  return out;
}

}  // namespace coalflow
