// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coalflow/runner.hpp"

using namespace coalflow;
namespace fs = std::filesystem;

namespace {

// Frozen oracles (mpmath, 50 digits).
constexpr double kErfHalf = 0.5204998778130465;
constexpr double kInvSqrtPi = 0.5641895835477563;
constexpr double kOuScale01 = 0.10033433571892294;  // m(0.1) for OU(1,1); m(0) = 0
constexpr double kExpMinus1 = 0.36787944117144233;
constexpr double kOneMinusExpMinus2 = 0.8646647167633873;

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!ok) detail.push_back(what);
  }
  void require(const TestReport& r) {
    std::ostringstream s;
    s << r.name << " stat=" << r.statistic << " ref=" << r.reference << " se=" << r.mc_std_error;
    require(r.as_expected(), s.str());
  }
};

std::vector<TestReport> select(const ReportBundle& b, const std::string& prefix) {
  std::vector<TestReport> out;
  for (const auto& r : b.reports) {
    if (starts_with(r.name, prefix)) out.push_back(r);
  }
  return out;
}

const TestReport* find(const std::vector<TestReport>& rs, const std::string& fragment) {
  for (const auto& r : rs) {
    if (r.name.find(fragment) != std::string::npos) return &r;
  }
  return nullptr;
}

// Fine-step Euler check of the two-point oracle with a generator unrelated to
// the library: the gap of two Brownian motions is a BM of variance rate 2.
double fine_step_no_meet(double gap, double t, double dt, std::size_t reps) {
  std::mt19937_64 gen(20240601);
  std::normal_distribution<double> z(0.0, std::sqrt(2.0 * dt));
  const auto steps = static_cast<std::size_t>(std::llround(t / dt));
  std::size_t alive = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    double d = gap;
    bool met = false;
    for (std::size_t k = 0; k < steps && !met; ++k) {
      d += z(gen);
      met = d <= 0.0;
    }
    if (!met) ++alive;
  }
  return static_cast<double>(alive) / static_cast<double>(reps);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  RunConfig full = default_run_config();
  full.bundles = {"all"};
  const fs::path root = fs::temp_directory_path() / "coalflow_acceptance";
  fs::remove_all(root);
  full.out = root / "a";
  const VerifyOutcome first = cmd_verify(full);
  full.out = root / "b";
  const VerifyOutcome second = cmd_verify(full);
  const ReportBundle& all = first.bundles.at(0);
  std::vector<Criterion> results;

  {
    Criterion c{1, "cocycle exact on analytic flow and 5 Arratia skeletons"};
    const auto reports = select(all, "cocycle/");
    c.require(reports.size() == 1 + 5, "expected 6 cocycle reports");
    for (const auto& r : reports) {
      c.require(r);
      c.require(r.replicas >= 1000, r.name + ": fewer than 1000 samples");
    }
    results.push_back(c);
  }
  {
    Criterion c{2, "F1/F5 exact on 10^4 tuples, F2 within 8*dx, identity fails F4"};
    const ReportBundle& b = all;
    for (const char* who : {"axioms/analytic/", "axioms/skeleton/"}) {
      const auto rs = select(b, who);
      for (const char* f : {"F1", "F2", "F5"}) {
        const TestReport* r = find(rs, f);
        c.require(r != nullptr, std::string(who) + f + " missing");
        if (r) c.require(*r);
      }
      if (const TestReport* f1 = find(rs, "F1")) c.require(f1->replicas >= 10000, "F1 tuples < 10^4");
    }
    if (const TestReport* f2 = find(select(b, "axioms/skeleton/"), "F2")) {
      c.require(f2->reference == 8.0 * full.skeleton.spacing, "F2 tolerance is not 8*dx");
    }
    const auto control = select(b, "negative_control/identity/");
    c.require(control.size() == 1 && !control[0].pass, "identity F4 did not fail");
    results.push_back(c);
  }
  {
    Criterion c{3, "Arratia no-meet at (0,1,1) = erf(0.5) +- 0.01 at 10^5"};
    const auto rs = select(all, "two_point/");
    c.require(rs.size() == 1, "missing report");
    for (const auto& r : rs) {
      c.require(r);
      c.require(std::abs(r.reference - kErfHalf) < 1e-12, "oracle differs from erf(0.5)");
      c.require(r.replicas >= 100000, "fewer than 10^5 replicas");
    }
    const double fine = fine_step_no_meet(1.0, 1.0, 1e-4, 4000);
    std::ostringstream s;
    s << "fine-step MC " << fine << " vs erf(0.5)";
    c.require(std::abs(fine - kErfHalf) < 0.03, s.str());
    results.push_back(c);
  }
  {
    Criterion c{4, "meeting bounds: Arratia 0.1/sqrt(pi), OU |m(0.1)-m(0)|"};
    const auto rs = select(all, "meeting_bound/");
    const TestReport* arr = find(rs, "arratia");
    const TestReport* lit = find(rs, "|m(y)-m(x)|");
    c.require(arr && lit, "missing reports");
    if (arr) {
      c.require(*arr);
      c.require(std::abs(arr->reference - 0.1 * kInvSqrtPi) < 1e-12, "Arratia bound value");
    }
    if (lit) {
      c.require(*lit);
      c.require(std::abs(lit->reference - kOuScale01) < 1e-9, "OU scale difference value");
    }
    for (const auto& r : rs) c.require(r);
    results.push_back(c);
  }
  {
    Criterion c{5, "512 starts in (0,1), t-s=1: mean clusters <= 1.5642 + 3se"};
    const auto rs = select(all, "cluster_count/");
    c.require(!rs.empty(), "missing report");
    if (!rs.empty()) {
      c.require(std::abs(rs[0].reference - (1.0 + kInvSqrtPi)) < 1e-12, "bound value");
      c.require(rs[0].replicas >= 200, "fewer than 200 replicas");
    }
    for (const auto& r : rs) c.require(r);
    results.push_back(c);
  }
  {
    Criterion c{6, "shift invariance h in {0.25,0.5}; drift control fails"};
    const ReportBundle& b = all;
    const auto rs = select(b, "shift_invariance/");
    c.require(rs.size() == 4, "expected KS and energy reports for two shifts");
    c.require(full.shift_queries.size() == 10, "expected 10 queries");
    for (const auto& r : rs) {
      c.require(r);
      c.require(r.replicas >= 2000, r.name + ": fewer than 2000 replicas");
    }
    const auto control = select(b, "negative_control/drift/");
    bool control_failed = false;
    for (const auto& r : control) control_failed = control_failed || !r.pass;
    c.require(!control.empty() && control_failed, "drift control passed");
    results.push_back(c);
  }
  {
    Criterion c{7, "OU(1,sqrt2) from 1 at t=1: mean e^-1 +- 0.01, variance 1-e^-2 +- 0.02"};
    const auto rs = select(all, "marginals/");
    const TestReport* mean = find(rs, "ou(rate=1,volatility=1.41421) mean");
    const TestReport* var = find(rs, "ou(rate=1,volatility=1.41421) variance");
    c.require(mean && var, "missing OU reports");
    if (mean) {
      c.require(*mean);
      c.require(std::abs(mean->reference - kExpMinus1) < 1e-12 && mean->tolerance == 0.01, "mean oracle");
      c.require(mean->replicas >= 100000, "fewer than 10^5 replicas");
    }
    if (var) {
      c.require(*var);
      c.require(std::abs(var->reference - kOneMinusExpMinus2) < 1e-12 && var->tolerance == 0.02,
                "variance oracle");
    }
    for (const auto& r : rs) c.require(r);
    results.push_back(c);
  }
  {
    Criterion c{8, "stopped equivalence: energy test, starts (0,1), t=1, 5000 vs 5000"};
    const auto rs = select(all, "stopped/");
    c.require(rs.size() == 1, "missing report");
    for (const auto& r : rs) {
      c.require(r);
      c.require(r.replicas >= 5000, "fewer than 5000 replicas");
    }
    results.push_back(c);
  }
  {
    Criterion c{9, "appendix: composition, six uniform marginals, psi02==psi01, |corr| < 0.01"};
    const auto rs = select(all, "counterexample/");
    int marginals = 0;
    for (const auto& r : rs) {
      c.require(r);
      if (r.name.find("marginal") != std::string::npos) ++marginals;
    }
    c.require(marginals == 6, "expected six marginal tests");
    const TestReport* comp = find(rs, "composition psi");
    c.require(comp && comp->replicas >= 10000, "composition replicas");
    const TestReport* corr = find(rs, "|corr");
    c.require(corr && corr->replicas >= 100000, "correlation replicas");
    results.push_back(c);
  }
  {
    Criterion c{10, "two full verify runs give byte-identical report bundles"};
    c.require(first.artifacts.size() == second.artifacts.size(), "artifact lists differ");
    std::size_t compared = 0;
    for (const auto& p : first.artifacts) {
      if (p.filename() == "manifest.json") continue;  // carries timestamps
      ++compared;
      c.require(slurp(p) == slurp(root / "b" / p.filename()), p.filename().string() + " differs");
    }
    c.require(compared >= 3, "nothing compared");
    results.push_back(c);
  }
  fs::remove_all(root);

  bool ok = true;
  for (const auto& c : results) {
    std::printf("%s criterion %d: %s\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str());
    for (const auto& d : c.detail) std::printf("    %s\n", d.c_str());
    ok = ok && c.pass;
  }
  return ok ? 0 : 1;
}
