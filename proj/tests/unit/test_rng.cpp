#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "coalflow/errors.hpp"
#include "coalflow/rng.hpp"
#include "coalflow/stats.hpp"

using namespace coalflow;

TEST_CASE("streams are reproducible and addressable") {
  RngStream a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c = RngStream(5).substream(3).substream(1);
  RngStream d = RngStream(5).substream(3).substream(1);
  CHECK(c.next_u64() == d.next_u64());
  CHECK(RngStream(5).substream(1).next_u64() != RngStream(5).substream(2).next_u64());
  CHECK(RngStream(5).next_u64() != RngStream(6).next_u64());
}

TEST_CASE("substream leaves the parent untouched") {
  RngStream a(9);
  RngStream ref(9);
  (void)a.substream(4);
  CHECK(a.next_u64() == ref.next_u64());
}

TEST_CASE("path depth is bounded") {
  RngStream r(1);
  for (std::size_t i = 0; i < RngStream::kMaxDepth; ++i) r = r.substream(i);
  CHECK_THROWS_AS((void)r.substream(0), InvalidArgument);
}

TEST_CASE("uniform lies in the open unit interval with the right moments") {
  RngStream r(11);
  std::vector<double> u(200000);
  for (auto& v : u) {
    v = r.uniform();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
  const MeanSe m = mean_se(u);
  CHECK(std::abs(m.mean - 0.5) < 4 * m.se);
  CHECK(ks_one_sample(u, [](double x) { return x; }).p_value > 1e-3);
}

TEST_CASE("normal draws match N(0,1)") {
  RngStream r(12);
  std::vector<double> z(200000);
  for (auto& v : z) v = r.normal();
  CHECK(std::abs(mean_se(z).mean) < 0.01);
  CHECK(std::abs(sample_variance(z) - 1.0) < 0.015);
  CHECK(ks_one_sample(z, normal_cdf).p_value > 1e-3);
}

TEST_CASE("sibling substreams are uncorrelated") {
  std::vector<double> a(50000), b(50000);
  RngStream ra = RngStream(3).substream(0);
  RngStream rb = RngStream(3).substream(1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = ra.normal();
    b[i] = rb.normal();
  }
  CHECK(std::abs(pearson_correlation(a, b)) < 4.0 / std::sqrt(50000.0));
  std::set<std::uint64_t> keys;
  for (std::uint64_t i = 0; i < 10000; ++i) keys.insert(RngStream(3).substream(i).key());
  CHECK(keys.size() == 10000);
}
