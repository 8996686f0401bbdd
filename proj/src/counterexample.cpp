#include "coalflow/counterexample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "coalflow/errors.hpp"
#include "coalflow/stats.hpp"

namespace coalflow {

OmegaSquare OmegaSquare::sample(RngStream& rng) {
  OmegaSquare w;
  w.w1 = rng.uniform();
  w.w2 = rng.uniform();
  return w;
}

namespace {

void check_times(int s, int t) {
  if (s < 0 || t > 2 || s > t) {
    throw InvalidTimePair("time pair (" + std::to_string(s) + ", " + std::to_string(t) +
                          ") is not ordered in {0,1,2}");
  }
}

using Map = double (*)(int, int, const OmegaSquare&, double);

struct MapId {
  const char* flow;
  Map map;
  int s, t;
};

constexpr std::array<MapId, 6> kMaps{{{"psi", psi, 0, 1},
                                      {"psi", psi, 1, 2},
                                      {"psi", psi, 0, 2},
                                      {"psi~", psi_tilde, 0, 1},
                                      {"psi~", psi_tilde, 1, 2},
                                      {"psi~", psi_tilde, 0, 2}}};

std::string map_name(const MapId& m) {
  return std::string(m.flow) + "_" + std::to_string(m.s) + std::to_string(m.t);
}

}  // namespace

double psi(int s, int t, const OmegaSquare& w, double x) {
  check_times(s, t);
  if (s == t) return x;
  if (s == 0) return w.w1;  // psi_{0,1} and psi_{0,2} = psi_{1,2}(w1) = w1
  return x == w.w1 ? w.w1 : w.w2;
}

double psi_tilde(int s, int t, const OmegaSquare& w, double x) {
  check_times(s, t);
  if (s == t) return x;
  if (s == 0 && t == 1) return w.w1;
  return w.w2;
}

ReportBundle verify_appendix(const AppendixOptions& options, const RngStream& rng) {
  if (options.replicas < 10000) throw InvalidArgument("appendix verification needs >= 10^4 replicas");
  if (options.grid_points < 2) throw InvalidArgument("appendix grid needs at least two points");
  ReportBundle bundle{"counterexample", {}};

  // (i) composition psi_{s,t}(psi_{r,s}(x)) == psi_{r,t}(x), exhaustively.
  std::size_t bad[2] = {0, 0};
  std::size_t checks = 0;
  RngStream comp = rng.substream(0);
  for (std::size_t n = 0; n < options.replicas; ++n) {
    const OmegaSquare w = OmegaSquare::sample(comp);
    for (std::size_t g = 0; g <= options.grid_points; ++g) {
      const double x = g < options.grid_points
                           ? static_cast<double>(g) / static_cast<double>(options.grid_points - 1)
                           : w.w1;
      for (int r = 0; r <= 2; ++r) {
        for (int s = r; s <= 2; ++s) {
          for (int t = s; t <= 2; ++t) {
            ++checks;
            if (psi(s, t, w, psi(r, s, w, x)) != psi(r, t, w, x)) ++bad[0];
            if (psi_tilde(s, t, w, psi_tilde(r, s, w, x)) != psi_tilde(r, t, w, x)) ++bad[1];
          }
        }
      }
    }
  }
  const char* flows[2] = {"psi", "psi~"};
  for (int f = 0; f < 2; ++f) {
    TestReport rep = make_report(std::string("composition ") + flows[f], Rule::Equal,
                                 static_cast<double>(bad[f]), 0.0);
    rep.replicas = options.replicas;
    rep.notes = std::to_string(checks) + " exact checks over (r,s,t), " +
                std::to_string(options.grid_points) + " grid points and x = w1";
    bundle.append(rep);
  }

  // (ii) every single map sends x to a Uniform[0,1] value.
  const double xs[3] = {0.3, 0.5, 0.7};
  for (std::size_t m = 0; m < kMaps.size(); ++m) {
    RngStream r = rng.substream(1).substream(m);
    const double x = xs[m % 3];
    std::vector<double> values(options.replicas);
    for (auto& v : values) v = kMaps[m].map(kMaps[m].s, kMaps[m].t, OmegaSquare::sample(r), x);
    const TestResult ks = ks_one_sample(values, [](double v) { return std::clamp(v, 0.0, 1.0); });
    TestReport rep = make_report("marginal " + map_name(kMaps[m]), Rule::PValueAtLeast, ks.p_value,
                                 options.alpha);
    rep.replicas = options.replicas;
    std::ostringstream notes;
    notes << "x=" << x << ", KS D=" << ks.statistic << " vs Uniform[0,1]";
    rep.notes = notes.str();
    bundle.append(rep);
  }

  // (iii) psi_{0,1}(x) and psi_{1,2}(y) are independent.
  for (int f = 0; f < 2; ++f) {
    const Map map = f == 0 ? psi : psi_tilde;
    RngStream r = rng.substream(2).substream(static_cast<std::uint64_t>(f));
    std::vector<double> a(options.dcor_samples), b(options.dcor_samples);
    for (std::size_t i = 0; i < options.dcor_samples; ++i) {
      const OmegaSquare w = OmegaSquare::sample(r);
      a[i] = map(0, 1, w, 0.3);
      b[i] = map(1, 2, w, 0.7);
    }
    const TestResult d = distance_correlation_test(a, b, options.permutations, r.substream(0));
    TestReport rep = make_report(std::string("independence ") + flows[f] + "_01, " + flows[f] + "_12",
                                 Rule::PValueAtLeast, d.p_value, options.alpha / 2.0);
    rep.replicas = options.dcor_samples;
    rep.notes = "distance correlation^2 " + std::to_string(d.statistic) + ", permutation test at x=0.3, y=0.7";
    bundle.append(rep);
  }

  // (iv) distinguisher.
  {
    RngStream r = rng.substream(3);
    std::size_t equal = 0;
    for (std::size_t n = 0; n < options.replicas; ++n) {
      const OmegaSquare w = OmegaSquare::sample(r);
      const double x = r.uniform();
      if (psi(0, 2, w, x) == psi(0, 1, w, x)) ++equal;
    }
    TestReport rep = make_report("distinguisher psi_02 == psi_01", Rule::Equal,
                                 static_cast<double>(equal), static_cast<double>(options.replicas));
    rep.replicas = options.replicas;
    rep.notes = "replicas with exact equality";
    bundle.append(rep);
  }
  {
    RngStream r = rng.substream(4);
    const std::size_t n = options.correlation_replicas;
    std::vector<double> a(n), b(n), same_a(n), same_b(n);
    for (std::size_t i = 0; i < n; ++i) {
      const OmegaSquare w = OmegaSquare::sample(r);
      a[i] = psi_tilde(0, 1, w, 0.5);
      b[i] = psi_tilde(0, 2, w, 0.5);
      same_a[i] = psi(0, 1, w, 0.5);
      same_b[i] = psi(0, 2, w, 0.5);
    }
    const double corr = pearson_correlation(a, b);
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    TestReport zero = make_report("distinguisher corr(psi~_01, psi~_02) within 3 se", Rule::AtMostPlus3Se,
                                  std::abs(corr), 0.0, se);
    zero.replicas = n;
    zero.notes = "sample correlation " + std::to_string(corr) + ", se 1/sqrt(n) under independence";
    bundle.append(zero);
    TestReport limit = make_report("distinguisher |corr(psi~_01, psi~_02)| limit", Rule::AtMost,
                                   std::abs(corr), options.correlation_limit);
    limit.replicas = n;
    limit.notes = zero.notes;
    bundle.append(limit);
    TestReport joint = make_report("distinguisher corr(psi_01, psi_02)", Rule::WithinTolerance,
                                   pearson_correlation(same_a, same_b), 1.0, 0.0, 1e-12);
    joint.replicas = n;
    joint.notes = "psi_01 and psi_02 coincide, so their correlation is 1";
    bundle.append(joint);
  }
  return bundle;
}

std::string appendix_verdict_table(const ReportBundle& bundle) {
  auto find = [&](const std::string& prefix) -> const TestReport* {
    for (const auto& r : bundle.reports) {
      if (r.name == prefix || r.name.rfind(prefix, 0) == 0) return &r;
    }
    return nullptr;
  };
  auto mark = [](const TestReport* r) { return r == nullptr ? "n/a" : (r->pass ? "yes" : "NO"); };
  std::ostringstream table;
  const auto row = [&](const std::string& label, const TestReport* a, const TestReport* b) {
    std::string l = label;
    l.resize(34, ' ');
    std::string ma = mark(a);
    ma.resize(7, ' ');
    table << l << ma << mark(b) << "\n";
  };
  table << "property                          psi    psi~\n";
  row("composition exact", find("composition psi"), find("composition psi~"));
  for (const char* m : {"01", "12", "02"}) {
    row(std::string("uniform marginal ") + m, find(std::string("marginal psi_") + m),
        find(std::string("marginal psi~_") + m));
  }
  row("map 01 independent of map 12", find("independence psi_"), find("independence psi~"));
  const TestReport* eq = find("distinguisher psi_02 == psi_01");
  const TestReport* corr = find("distinguisher |corr");
  std::string l = "psi_02 == psi_01";
  l.resize(34, ' ');
  table << l << (eq && eq->pass ? "yes    " : "NO     ") << (corr && corr->pass ? "no" : "?") << "\n";
  l = "psi_01, psi_02 independent";
  l.resize(34, ' ');
  table << l << (eq && eq->pass ? "no     " : "?      ") << (corr && corr->pass ? "yes" : "NO") << "\n";
  const bool split = bundle.ok();
  table << "verdict: "
        << (split ? "same single-map laws and composition, different joint laws"
                  : "the expected split was not reproduced")
        << "\n";
  return table.str();
}

}  // namespace coalflow
