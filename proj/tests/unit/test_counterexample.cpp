#include <doctest.h>

#include "coalflow/counterexample.hpp"
#include "coalflow/errors.hpp"

using namespace coalflow;

TEST_CASE("psi maps") {
  const OmegaSquare w{0.25, 0.75};
  CHECK(psi(0, 1, w, 0.9) == 0.25);
  CHECK(psi(1, 2, w, 0.25) == 0.25);
  CHECK(psi(1, 2, w, 0.3) == 0.75);
  CHECK(psi(0, 2, w, 0.3) == 0.25);
  CHECK(psi(1, 1, w, 0.3) == 0.3);
  CHECK(psi_tilde(0, 1, w, 0.3) == 0.25);
  CHECK(psi_tilde(1, 2, w, 0.25) == 0.75);
  CHECK(psi_tilde(0, 2, w, 0.3) == 0.75);
  CHECK_THROWS_AS(psi(2, 1, w, 0.3), InvalidTimePair);
  CHECK_THROWS_AS(psi_tilde(0, 3, w, 0.3), InvalidTimePair);
  CHECK_THROWS_AS(psi(-1, 1, w, 0.3), InvalidTimePair);
}

TEST_CASE("appendix verification") {
  AppendixOptions o;
  o.correlation_replicas = 100000;
  o.dcor_samples = 500;
  o.permutations = 99;
  const ReportBundle b = verify_appendix(o, RngStream(8));
  for (const auto& r : b.reports) {
    INFO(r.name << " stat=" << r.statistic << " ref=" << r.reference);
    CHECK(r.as_expected());
  }
  CHECK(b.ok());
  const std::string table = appendix_verdict_table(b);
  CHECK(table.find("same single-map laws") != std::string::npos);
  CHECK(table.find("NO") == std::string::npos);

  o.replicas = 100;
  CHECK_THROWS_AS(verify_appendix(o, RngStream(8)), InvalidArgument);
}
