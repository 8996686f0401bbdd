#include "coalflow/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace coalflow {

namespace {

struct Panel {
  double a, b, fa, fm, fb, whole;
};

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double refine(const std::function<double(double)>& f, const Panel& p, double tol, int depth) {
  const double m = 0.5 * (p.a + p.b);
  const double lm = 0.5 * (p.a + m);
  const double rm = 0.5 * (m + p.b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(p.a, m, p.fa, flm, p.fm);
  const double right = simpson(m, p.b, p.fm, frm, p.fb);
  const double delta = left + right - p.whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return refine(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, depth - 1) +
         refine(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_floor, int max_depth) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_simpson(f, b, a, rel_tol, abs_floor, max_depth);

  // Seed with four panels so a symmetric integrand cannot fool the first test.
  constexpr int kPanels = 4;
  const double h = (b - a) / kPanels;
  double coarse = 0.0;
  Panel panels[kPanels];
  double fa = f(a);
  for (int i = 0; i < kPanels; ++i) {
    const double pa = a + i * h;
    const double pb = (i + 1 == kPanels) ? b : a + (i + 1) * h;
    const double fm = f(0.5 * (pa + pb));
    const double fb = f(pb);
    panels[i] = {pa, pb, fa, fm, fb, simpson(pa, pb, fa, fm, fb)};
    coarse += panels[i].whole;
    fa = fb;
  }
  const double tol = std::max(rel_tol * std::abs(coarse), abs_floor) / kPanels;
  double total = 0.0;
  for (const auto& p : panels) total += refine(f, p, tol, max_depth);
  return total;
}

}  // namespace coalflow
