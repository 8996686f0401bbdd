#pragma once

#include <functional>

namespace coalflow {

/// Adaptive Simpson quadrature of f over [a, b] (a > b gives the negated
/// integral). Recursion stops when the Richardson-corrected estimate agrees
/// to rel_tol * |whole| (or abs_floor, whichever is larger).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, double abs_floor = 1e-15, int max_depth = 48);

}  // namespace coalflow
