#include <doctest.h>

#include <cmath>

#include "coalflow/quadrature.hpp"

using namespace coalflow;

TEST_CASE("adaptive Simpson integrates smooth functions") {
  // Frozen from an independent arbitrary-precision quadrature.
  CHECK(adaptive_simpson([](double y) { return std::exp(y * y); }, 0.0, 1.0) ==
        doctest::Approx(1.4626517459071816).epsilon(1e-10));
  CHECK(adaptive_simpson([](double y) { return y * y * y; }, 0.0, 2.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(adaptive_simpson([](double y) { return std::sin(y); }, 0.0, M_PI) ==
        doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("reversed limits negate and empty ranges vanish") {
  auto f = [](double y) { return 1.0 + y; };
  CHECK(adaptive_simpson(f, 1.0, 0.0) == doctest::Approx(-1.5));
  CHECK(adaptive_simpson(f, 0.3, 0.3) == 0.0);
}
