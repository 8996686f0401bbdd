#include "coalflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "coalflow/errors.hpp"
#include "coalflow/parallel.hpp"
#include "coalflow/stats.hpp"

namespace coalflow {

namespace {

// Drives one replica of the coalescing motion step by step, like
// sample_npoint_motion but without keeping the history.
class Driver {
 public:
  Driver(const MotionModel& model, std::span<const double> starts, double horizon, double dt,
         RngStream rng)
      : model_(model),
        rng_(rng),
        steps_(step_count(horizon, dt)),
        dt_(steps_ ? horizon / static_cast<double>(steps_) : 0.0),
        state_(SystemState::from_starts(starts)) {}

  [[nodiscard]] std::size_t steps() const { return steps_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] const SystemState& state() const { return state_; }

  void step() {
    RngStream r = rng_.substream(k_++);
    advance(model_, state_, dt_, r);
  }

 private:
  const MotionModel& model_;
  RngStream rng_;
  std::size_t steps_;
  double dt_;
  SystemState state_;
  std::size_t k_ = 0;
};

std::string describe(std::initializer_list<std::pair<const char*, double>> fields) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [k, v] : fields) {
    out << (first ? "" : ", ") << k << "=" << v;
    first = false;
  }
  return out.str();
}

}  // namespace

TestReport test_two_point_law(double x, double y, double t, std::size_t replicas,
                              const RngStream& rng, double dt, double tolerance) {
  if (!(x <= y)) throw InvalidArgument("two-point law needs x <= y");
  if (replicas == 0) throw InvalidArgument("two-point law needs replicas");
  const MotionModel model = DiffusionSpec::arratia();
  const double starts[2] = {x, y};
  std::vector<double> apart(replicas, 0.0);
  parallel_for(replicas, [&](std::size_t i) {
    Driver d(model, starts, t, dt, rng.substream(i));
    for (std::size_t k = 0; k < d.steps() && d.state().cluster_count() == 2; ++k) d.step();
    apart[i] = d.state().cluster_count() == 2 ? 1.0 : 0.0;
  });
  const MeanSe m = mean_se(apart);
  const double oracle = pair_no_meet_probability_exact(x, y, t);
  TestReport r = make_report("two-point no-meet frequency", Rule::WithinTolerance, m.mean, oracle,
                             m.se, tolerance);
  r.replicas = replicas;
  r.notes = "Arratia, " + describe({{"x", x}, {"y", y}, {"t", t}, {"dt", dt}}) +
            "; oracle erf((y-x)/(2 sqrt t))";
  return r;
}

TestReport test_meeting_bound(const DiffusionSpec& spec, double x, double y, double c,
                              double c_hi, double t, std::size_t replicas, const RngStream& rng,
                              double dt) {
  if (!(c <= x && x <= y && y <= c_hi)) throw InvalidArgument("meeting bound needs c <= x <= y <= c'");
  if (replicas == 0) throw InvalidArgument("meeting bound needs replicas");
  const double bound = meeting_bound(spec, x, y, c, c_hi, t);
  std::vector<double> event(replicas, 0.0);
  if (x < y) {
    const MotionModel model = spec;
    const double starts[2] = {x, y};
    parallel_for(replicas, [&](std::size_t i) {
      Driver d(model, starts, t, dt, rng.substream(i));
      for (std::size_t k = 0; k < d.steps(); ++k) {
        d.step();
        const auto pos = d.state().positions();
        if (pos.size() < 2 || pos.front() < c || pos.back() > c_hi) return;
      }
      event[i] = 1.0;
    });
  }
  const MeanSe m = mean_se(event);
  TestReport r = make_report("meeting bound " + spec.name(), Rule::AtMostPlus3Se, m.mean, bound, m.se);
  r.replicas = replicas;
  r.notes = describe({{"x", x}, {"y", y}, {"c", c}, {"c'", c_hi}, {"t", t}, {"dt", dt}}) +
            "; P(in box and not met) vs |m(y)-m(x)| / (sqrt(pi t) delta)";
  return r;
}

TestReport test_cluster_count(const MotionModel& model, double a, double b, double s, double t,
                              std::size_t n_starts, std::size_t replicas, const RngStream& rng,
                              double dt) {
  if (!(a < b) || !(s < t)) throw InvalidArgument("cluster count needs a < b and s < t");
  if (n_starts == 0 || replicas == 0) throw InvalidArgument("cluster count needs starts and replicas");
  std::vector<double> starts(n_starts);
  for (std::size_t i = 0; i < n_starts; ++i) {
    starts[i] = n_starts == 1 ? 0.5 * (a + b)
                              : a + (b - a) * (static_cast<double>(i) + 0.5) / static_cast<double>(n_starts);
  }
  std::vector<double> counts(replicas, 0.0);
  parallel_for(replicas, [&](std::size_t i) {
    Driver d(model, starts, t - s, dt, rng.substream(i));
    for (std::size_t k = 0; k < d.steps(); ++k) d.step();
    counts[i] = static_cast<double>(d.state().cluster_count());
  });
  const DiffusionSpec* spec = std::get_if<DiffusionSpec>(&model);
  const DiffusionSpec brownian = DiffusionSpec::arratia();
  const double span = 10.0 * (b - a) + 10.0 * std::sqrt(t - s);
  const double bound = 1.0 + meeting_bound(spec ? *spec : brownian, a, b, a - span, b + span, t - s);
  const MeanSe m = mean_se(counts);
  TestReport r = make_report("cluster count " + model_name(model), Rule::AtMostPlus3Se, m.mean,
                             bound, m.se);
  r.replicas = replicas;
  r.notes = describe({{"a", a}, {"b", b}, {"t-s", t - s}, {"starts", static_cast<double>(n_starts)},
                      {"dt", dt}}) +
            "; mean distinct values vs 1 + m(b) - m(a)";
  return r;
}

std::vector<TestReport> test_shift_invariance(const SkeletonConfig& config, double h,
                                              std::span<const EvalQuery> queries,
                                              std::size_t replicas, const RngStream& rng,
                                              const ShiftInvarianceOptions& options) {
  if (queries.empty() || replicas < 2) throw InvalidArgument("shift test needs queries and replicas");
  config.validate();
  const std::size_t nq = queries.size();
  for (const auto& q : queries) {
    if (!config.grid_index(q.s) || !config.grid_index(q.t) || !config.grid_index(q.s + h) ||
        !config.grid_index(q.t + h) || q.t < q.s) {
      throw InvalidArgument("shift test queries must stay on the grid inside the horizon");
    }
  }

  // values[set][replica * nq + query]
  std::vector<double> values[2] = {std::vector<double>(replicas * nq), std::vector<double>(replicas * nq)};
  std::vector<char> missing(2 * replicas, 0);
  parallel_for(2 * replicas, [&](std::size_t job) {
    const std::size_t set = job / replicas;
    const std::size_t i = job % replicas;
    auto sk = std::make_shared<const SkeletonFlow>(build_skeleton(config, rng.substream(set).substream(i)));
    const FlowElement base = FlowElement::envelope(std::move(sk));
    const FlowElement f = set == 0 ? base : shift(base, h);
    for (std::size_t q = 0; q < nq; ++q) {
      try {
        values[set][i * nq + q] = evaluate(f, queries[q]);
      } catch (const AboveRange&) {
        values[set][i * nq + q] = std::numeric_limits<double>::quiet_NaN();
        missing[job] = 1;
      }
    }
  });
  const auto lost = static_cast<std::size_t>(std::count(missing.begin(), missing.end(), 1));

  const double level = options.alpha / static_cast<double>(nq + 1);
  double min_p = 1.0;
  std::ostringstream per_query;
  per_query.precision(4);
  for (std::size_t q = 0; q < nq; ++q) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < replicas; ++i) {
      if (!std::isnan(values[0][i * nq + q])) a.push_back(values[0][i * nq + q]);
      if (!std::isnan(values[1][i * nq + q])) b.push_back(values[1][i * nq + q]);
    }
    const TestResult ks = ks_two_sample(a, b);
    min_p = std::min(min_p, ks.p_value);
    per_query << (q ? "; " : "") << "(" << queries[q].s << "," << queries[q].x << ","
              << queries[q].t << ") D=" << ks.statistic << " p=" << ks.p_value;
  }
  const std::string tag = " h=" + format_double(h);
  TestReport ks = make_report("shift invariance KS" + tag, Rule::PValueAtLeast, min_p, level);
  ks.replicas = replicas;
  ks.negative_control = options.negative_control;
  ks.notes = "min p over " + std::to_string(nq) + " queries, Bonferroni level alpha/" +
             std::to_string(nq + 1) + "; replicas lost to range: " + std::to_string(lost) + "; " +
             per_query.str();

  Sample sa{{}, nq}, sb{{}, nq};
  for (std::size_t i = 0; i < replicas; ++i) {
    bool ok_a = true, ok_b = true;
    for (std::size_t q = 0; q < nq; ++q) {
      ok_a = ok_a && !std::isnan(values[0][i * nq + q]);
      ok_b = ok_b && !std::isnan(values[1][i * nq + q]);
    }
    if (ok_a) sa.values.insert(sa.values.end(), values[0].begin() + static_cast<long>(i * nq),
                               values[0].begin() + static_cast<long>((i + 1) * nq));
    if (ok_b) sb.values.insert(sb.values.end(), values[1].begin() + static_cast<long>(i * nq),
                               values[1].begin() + static_cast<long>((i + 1) * nq));
  }
  const TestResult energy = energy_distance_test(sa, sb, options.permutations, rng.substream(2));
  TestReport joint = make_report("shift invariance joint energy" + tag, Rule::PValueAtLeast,
                                 energy.p_value, level);
  joint.replicas = std::min(sa.size(), sb.size());
  joint.negative_control = options.negative_control;
  joint.notes = "energy distance " + format_double(energy.statistic) + " on " +
                std::to_string(nq) + "-dimensional query vectors, " +
                std::to_string(options.permutations) + " permutations";
  return {ks, joint};
}

std::vector<TestReport> test_marginal_law(const DiffusionSpec& spec, double x, double t,
                                          std::size_t replicas, const RngStream& rng, double dt,
                                          double alpha, double mean_tolerance,
                                          double variance_tolerance) {
  if (t < 0.0) throw NegativeDuration("marginal law needs t >= 0");
  if (replicas < 2) throw InvalidArgument("marginal law needs replicas");
  double mean = 0.0;
  double variance = 0.0;
  if (spec.is_arratia()) {
    mean = x;
    variance = t;
  } else if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&spec.kind())) {
    mean = x * std::exp(-ou->rate * t);
    variance = ou->volatility * ou->volatility * (1.0 - std::exp(-2.0 * ou->rate * t)) / (2.0 * ou->rate);
  } else {
    return {skipped_report("marginal law " + spec.name(), "no analytic law for generic diffusions")};
  }

  const MotionModel model = spec;
  const double start[1] = {x};
  std::vector<double> end(replicas);
  parallel_for(replicas, [&](std::size_t i) {
    Driver d(model, start, t, dt, rng.substream(i));
    for (std::size_t k = 0; k < d.steps(); ++k) d.step();
    end[i] = d.state().positions()[0];
  });

  const std::string name = "marginal law " + spec.name();
  const std::string where = describe({{"x", x}, {"t", t}, {"dt", dt}});
  if (t == 0.0) {
    const auto moved = std::count_if(end.begin(), end.end(), [&](double v) { return v != x; });
    TestReport r = make_report(name + " degenerate", Rule::Equal, static_cast<double>(moved), 0.0);
    r.replicas = replicas;
    r.notes = where + "; samples different from x";
    return {r};
  }
  const double sd = std::sqrt(variance);
  const TestResult ks = ks_one_sample(end, [&](double v) { return normal_cdf((v - mean) / sd); });
  TestReport r_ks = make_report(name + " KS", Rule::PValueAtLeast, ks.p_value, alpha);
  r_ks.replicas = replicas;
  r_ks.notes = where + "; D=" + format_double(ks.statistic) + " vs N(" + format_double(mean) + ", " +
               format_double(variance) + ")";
  const MeanSe m = mean_se(end);
  TestReport r_mean = make_report(name + " mean", Rule::WithinTolerance, m.mean, mean, m.se, mean_tolerance);
  r_mean.replicas = replicas;
  r_mean.notes = where;
  TestReport r_var = make_report(name + " variance", Rule::WithinTolerance, sample_variance(end),
                                 variance, 0.0, variance_tolerance);
  r_var.replicas = replicas;
  r_var.notes = where;
  return {r_ks, r_mean, r_var};
}

std::vector<TestReport> test_small_time_continuity(const DiffusionSpec& spec, double u,
                                                   double eps, std::span<const double> t_ladder,
                                                   std::size_t replicas, const RngStream& rng,
                                                   double threshold, std::size_t steps_per_rung) {
  if (!(eps > 0.0)) throw InvalidArgument("small-time continuity needs eps > 0");
  if (t_ladder.empty() || replicas < 2) throw InvalidArgument("small-time continuity needs a ladder");
  for (std::size_t i = 0; i < t_ladder.size(); ++i) {
    if (!(t_ladder[i] > 0.0) || (i > 0 && !(t_ladder[i] < t_ladder[i - 1]))) {
      throw InvalidArgument("t ladder must be positive and decreasing");
    }
  }
  const MotionModel model = spec;
  const double start[1] = {u};
  std::vector<MeanSe> ratio;
  std::ostringstream notes;
  for (std::size_t rung = 0; rung < t_ladder.size(); ++rung) {
    const double t = t_ladder[rung];
    std::vector<double> exceed(replicas, 0.0);
    const RngStream base = rng.substream(rung);
    parallel_for(replicas, [&](std::size_t i) {
      Driver d(model, start, t, t / static_cast<double>(steps_per_rung), base.substream(i));
      for (std::size_t k = 0; k < d.steps(); ++k) {
        d.step();
        if (std::abs(d.state().positions()[0] - u) > eps) {
          exceed[i] = 1.0 / t;
          return;
        }
      }
    });
    ratio.push_back(mean_se(exceed));
    notes << (rung ? "; " : "") << "r(" << t << ")=" << ratio.back().mean;
  }
  std::size_t increases = 0;
  for (std::size_t i = 1; i < ratio.size(); ++i) {
    const double slack = 3.0 * std::hypot(ratio[i].se, ratio[i - 1].se);
    if (ratio[i].mean > ratio[i - 1].mean + slack) ++increases;
  }
  const std::string name = "small-time continuity " + spec.name();
  TestReport mono = make_report(name + " decreasing", Rule::Equal, static_cast<double>(increases), 0.0);
  mono.replicas = replicas;
  mono.notes = "eps=" + format_double(eps) + "; " + notes.str();
  TestReport last = make_report(name + " last rung", Rule::AtMostPlus3Se, ratio.back().mean,
                                threshold, ratio.back().se);
  last.replicas = replicas;
  last.notes = mono.notes;
  return {mono, last};
}

namespace {

constexpr std::size_t kCheckpoints = 4;

// Stopped-path features: positions at the checkpoints for every particle,
// then the stopping time (t when nothing met).
void push_features(std::vector<double>& out, const std::vector<std::vector<double>>& at_checkpoint,
                   double tau) {
  for (const auto& row : at_checkpoint) out.insert(out.end(), row.begin(), row.end());
  out.push_back(tau);
}

std::vector<std::size_t> checkpoint_steps(std::size_t steps) {
  std::vector<std::size_t> out;
  for (std::size_t j = 1; j <= kCheckpoints; ++j) out.push_back((steps * j) / kCheckpoints);
  return out;
}

// Independent particles with the same bridge stopping rule; written against
// the diffusion coefficients only, sharing no code with the stepper.
void independent_stopped(const DiffusionSpec& spec, std::span<const double> starts, double t,
                         double dt_max, RngStream rng, std::vector<double>& out) {
  const std::size_t n = starts.size();
  const std::size_t steps = step_count(t, dt_max);
  const double dt = steps ? t / static_cast<double>(steps) : 0.0;
  const auto marks = checkpoint_steps(steps);
  std::vector<double> x(starts.begin(), starts.end());
  std::vector<std::vector<double>> rows(kCheckpoints, std::vector<double>(n));
  double tau = t;
  bool stopped = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (x[i] == x[i + 1]) stopped = true;
  }
  if (stopped) tau = 0.0;
  std::size_t mark = 0;
  while (mark < kCheckpoints && marks[mark] == 0) rows[mark++] = x;
  for (std::size_t k = 1; k <= steps && !stopped; ++k) {
    std::vector<double> y(n);
    const double root = std::sqrt(dt);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = x[i] + spec.drift(x[i]) * dt + spec.diffusion(x[i]) * root * rng.normal();
    }
    std::vector<char> hit(n ? n - 1 : 0, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d0 = x[i + 1] - x[i];
      const double d1 = y[i + 1] - y[i];
      const double bi = spec.diffusion(x[i]);
      const double bj = spec.diffusion(x[i + 1]);
      const double u = rng.uniform();
      hit[i] = d1 <= 0.0 || u < std::exp(-2.0 * d0 * d1 / ((bi * bi + bj * bj) * dt));
      stopped = stopped || hit[i];
    }
    if (stopped) {
      // Each run of met neighbours moves together to one member chosen uniformly.
      for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && hit[j]) ++j;
        if (j > i) {
          const std::size_t pick = i + std::min<std::size_t>(j - i, static_cast<std::size_t>(rng.uniform() * (j - i + 1)));
          const double v = y[pick];
          for (std::size_t m = i; m <= j; ++m) y[m] = v;
        }
        i = j + 1;
      }
      tau = static_cast<double>(k) * dt;
    }
    x = y;
    while (mark < kCheckpoints && marks[mark] == k) rows[mark++] = x;
  }
  while (mark < kCheckpoints) rows[mark++] = x;
  push_features(out, rows, tau);
}

void coalescing_stopped(const DiffusionSpec& spec, std::span<const double> starts, double t,
                        double dt_max, RngStream rng, std::vector<double>& out) {
  const std::size_t n = starts.size();
  const MotionModel model = spec;
  Driver d(model, starts, t, dt_max, rng);
  const auto marks = checkpoint_steps(d.steps());
  auto snapshot = [&] {
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = d.state().position_of(i);
    return row;
  };
  std::vector<std::vector<double>> rows(kCheckpoints);
  double tau = t;
  bool stopped = d.state().cluster_count() < n;
  if (stopped) tau = 0.0;
  std::vector<double> frozen = snapshot();
  std::size_t mark = 0;
  while (mark < kCheckpoints && marks[mark] == 0) rows[mark++] = frozen;
  for (std::size_t k = 1; k <= d.steps(); ++k) {
    if (!stopped) {
      d.step();
      frozen = snapshot();
      if (d.state().cluster_count() < n) {
        stopped = true;
        tau = static_cast<double>(k) * d.dt();
      }
    }
    while (mark < kCheckpoints && marks[mark] == k) rows[mark++] = frozen;
  }
  while (mark < kCheckpoints) rows[mark++] = frozen;
  push_features(out, rows, tau);
}

}  // namespace

TestReport test_stopped_equivalence(const DiffusionSpec& spec, std::span<const double> starts,
                                    double t, std::size_t replicas, const RngStream& rng,
                                    double dt, double alpha, std::size_t permutations) {
  if (starts.empty() || !std::is_sorted(starts.begin(), starts.end())) {
    throw InvalidArgument("stopped equivalence needs sorted starts");
  }
  if (replicas < 2) throw InvalidArgument("stopped equivalence needs replicas");
  const std::size_t dim = kCheckpoints * starts.size() + 1;
  std::vector<std::vector<double>> rows_a(replicas), rows_b(replicas);
  parallel_for(2 * replicas, [&](std::size_t job) {
    const std::size_t i = job % replicas;
    if (job < replicas) {
      coalescing_stopped(spec, starts, t, dt, rng.substream(0).substream(i), rows_a[i]);
    } else {
      independent_stopped(spec, starts, t, dt, rng.substream(1).substream(i), rows_b[i]);
    }
  });
  Sample a{{}, dim}, b{{}, dim};
  for (std::size_t i = 0; i < replicas; ++i) {
    a.values.insert(a.values.end(), rows_a[i].begin(), rows_a[i].end());
    b.values.insert(b.values.end(), rows_b[i].begin(), rows_b[i].end());
  }
  TestReport r;
  std::ostringstream notes;
  notes << spec.name() << ", " << starts.size() << " starts, t=" << t << ", dt=" << dt;
  const TestResult e = energy_distance_test(a, b, permutations, rng.substream(2));
  r = make_report("stopped equivalence", Rule::PValueAtLeast, e.p_value, alpha);
  notes << "; energy distance " << e.statistic << ", " << permutations << " permutations";
  r.replicas = replicas;
  r.notes = notes.str();
  return r;
}

}  // namespace coalflow
