#include "coalflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coalflow/errors.hpp"

namespace coalflow {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

MeanSe mean_se(std::span<const double> values) {
  MeanSe out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(out.n);
  if (out.n > 1) out.se = std::sqrt(sample_variance(values) / static_cast<double>(out.n));
  return out;
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("correlation needs paired samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; value is 1 to double precision
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double stephens_p(double d, double n_eff) {
  const double root = std::sqrt(n_eff);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

}  // namespace

TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InvalidArgument("KS test needs a non-empty sample");
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, stephens_p(d, n)};
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS test needs non-empty samples");
  std::vector<double> xa(a.begin(), a.end());
  std::vector<double> xb(b.begin(), b.end());
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double v = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] == v) ++i;
    while (j < xb.size() && xb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, stephens_p(d, na * nb / (na + nb))};
}

TestResult energy_distance_test(const Sample& a, const Sample& b, std::size_t permutations,
                                RngStream rng) {
  if (a.dim != b.dim || a.size() < 2 || b.size() < 2) {
    throw InvalidArgument("energy test needs two samples of equal dimension");
  }
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const std::size_t n = na + nb;
  const std::size_t dim = a.dim;
  auto row = [&](std::size_t i) { return i < na ? a.row(i) : b.row(i - na); };

  // Condensed upper triangle, row i holds d(i, j) for j > i.
  std::vector<std::size_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + (n - 1 - i);
  std::vector<float> dist(offset[n]);
  std::vector<double> row_sum(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) s += (xi[c] - xj[c]) * (xi[c] - xj[c]);
      const auto d = static_cast<float>(std::sqrt(s));
      dist[offset[i] + j - i - 1] = d;
      row_sum[i] += d;
      row_sum[j] += d;
      total += d;
    }
  }

  // With pair sums S_aa, S_bb, S_ab (each pair once):
  // E = 2 S_ab / (na nb) - 2 S_aa / na^2 - 2 S_bb / nb^2.
  std::vector<float> mask(n);
  auto statistic = [&](const std::vector<std::size_t>& in_a) {
    std::fill(mask.begin(), mask.end(), 0.0f);
    for (std::size_t i : in_a) mask[i] = 1.0f;
    double s_aa = 0.0;
    double row_a = 0.0;
    for (std::size_t i : in_a) {
      row_a += row_sum[i];
      const float* d = dist.data() + offset[i];
      const float* m = mask.data() + i + 1;
      float acc = 0.0f;
      double part = 0.0;
      const std::size_t len = n - 1 - i;
      for (std::size_t j = 0; j < len; ++j) {
        acc += d[j] * m[j];
        if ((j & 1023) == 1023) {
          part += acc;
          acc = 0.0f;
        }
      }
      s_aa += part + acc;
    }
    const double s_ab = row_a - 2.0 * s_aa;
    const double s_bb = total - s_aa - s_ab;
    const double fa = static_cast<double>(na);
    const double fb = static_cast<double>(nb);
    return 2.0 * s_ab / (fa * fb) - 2.0 * s_aa / (fa * fa) - 2.0 * s_bb / (fb * fb);
  };

  std::vector<std::size_t> labels(n);
  std::iota(labels.begin(), labels.end(), 0);
  const double observed = statistic({labels.begin(), labels.begin() + static_cast<long>(na)});
  std::size_t at_least = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    // Partial Fisher-Yates: the first na entries form a uniform subset.
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
      std::swap(labels[i], labels[std::min(j, n - 1)]);
    }
    std::vector<std::size_t> in_a(labels.begin(), labels.begin() + static_cast<long>(na));
    std::sort(in_a.begin(), in_a.end());
    if (statistic(in_a) >= observed) ++at_least;
  }
  return {observed, static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1)};
}

namespace {

// Double-centred distance matrix, row-major.
std::vector<double> centred_distances(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> d(n * n);
  std::vector<double> mean_row(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d[i * n + j] = std::abs(v[i] - v[j]);
      mean_row[i] += d[i * n + j];
    }
    grand += mean_row[i];
    mean_row[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] += grand - mean_row[i] - mean_row[j];
  }
  return d;
}

}  // namespace

TestResult distance_correlation_test(std::span<const double> x, std::span<const double> y,
                                     std::size_t permutations, RngStream rng) {
  if (x.size() != y.size() || x.size() < 4) {
    throw InvalidArgument("distance correlation needs at least 4 paired samples");
  }
  const std::size_t n = x.size();
  const auto a = centred_distances(x);
  const auto b = centred_distances(y);
  auto dcov2 = [&](const std::vector<std::size_t>& perm) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* ai = a.data() + i * n;
      const double* bi = b.data() + perm[i] * n;
      for (std::size_t j = 0; j < n; ++j) s += ai[j] * bi[perm[j]];
    }
    return s / static_cast<double>(n * n);
  };
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const double vxy = dcov2(perm);
  double vxx = 0.0, vyy = 0.0;
  for (std::size_t i = 0; i < n * n; ++i) {
    vxx += a[i] * a[i];
    vyy += b[i] * b[i];
  }
  vxx /= static_cast<double>(n * n);
  vyy /= static_cast<double>(n * n);
  const double dcor2 = (vxx > 0.0 && vyy > 0.0) ? std::max(0.0, vxy) / std::sqrt(vxx * vyy) : 0.0;

  std::size_t at_least = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = std::min(i, static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1)));
      std::swap(perm[i], perm[j]);
    }
    if (dcov2(perm) >= vxy) ++at_least;
  }
  return {dcor2, static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1)};
}

}  // namespace coalflow
