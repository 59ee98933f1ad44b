#include "ibmvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/uniform_int_distribution.hpp>

#include "ibmvar/errors.hpp"
#include "ibmvar/rng.hpp"

namespace ibmvar::stats {

double Moments::std_error() const {
  return n == 0 ? 0.0 : std::sqrt(variance / static_cast<double>(n));
}

Moments moments(std::span<const double> x) {
  Moments m;
  m.n = x.size();
  if (x.empty()) return m;
  long double s = 0.0L;
  for (double v : x) s += v;
  m.mean = static_cast<double>(s / x.size());
  if (x.size() < 2) return m;
  long double ss = 0.0L;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.variance = static_cast<double>(ss / (x.size() - 1));
  return m;
}

double covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ArgumentError("covariance needs two equal-length samples of size >= 2");
  }
  const double mx = moments(x).mean;
  const double my = moments(y).mean;
  long double s = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return static_cast<double>(s / (x.size() - 1));
}

double variance_std_error(std::span<const double> x) {
  const Moments m = moments(x);
  if (m.n < 4) return 0.0;
  long double m4 = 0.0L;
  for (double v : x) m4 += std::pow(v - m.mean, 4);
  m4 /= m.n;
  const double n = static_cast<double>(m.n);
  const double s4 = m.variance * m.variance;
  return std::sqrt(std::max(0.0, static_cast<double>(m4) - (n - 3.0) / (n - 1.0) * s4) / n);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; value is 1 - O(1e-20)
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("KS test needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

TestResult ks_uniform(std::span<const double> u) {
  if (u.empty()) throw ArgumentError("KS test needs a non-empty sample");
  std::vector<double> x(u.begin(), u.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - v, v - static_cast<double>(i) / n});
  }
  const double ne = std::sqrt(n);
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

TestResult energy_test(std::span<const double> a, std::span<const double> b,
                       std::size_t dim, int permutations, std::uint64_t seed) {
  if (dim == 0 || a.size() % dim != 0 || b.size() % dim != 0) {
    throw ArgumentError("energy test: sample sizes must be multiples of the dimension");
  }
  const std::size_t n = a.size() / dim, m = b.size() / dim, total = n + m;
  if (n < 2 || m < 2) throw ArgumentError("energy test needs at least two rows per sample");
  auto row = [&](std::size_t i) {
    return i < n ? a.data() + i * dim : b.data() + (i - n) * dim;
  };
  // Pooled distance matrix in single precision; sums are accumulated in double.
  std::vector<float> dist(total * total);
  std::vector<double> row_sum(total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    dist[i * total + i] = 0.0f;
    for (std::size_t j = i + 1; j < total; ++j) {
      double s = 0.0;
      const double* p = row(i);
      const double* q = row(j);
      for (std::size_t k = 0; k < dim; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
      const auto v = static_cast<float>(std::sqrt(s));
      dist[i * total + j] = v;
      dist[j * total + i] = v;
    }
  }
  for (std::size_t i = 0; i < total; ++i) {
    double s = 0.0;
    const float* r = dist.data() + i * total;
    for (std::size_t j = 0; j < total; ++j) s += r[j];
    row_sum[i] = s;
  }
  const double grand = std::accumulate(row_sum.begin(), row_sum.end(), 0.0);
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);

  // Statistic from the within-A block only: S_AB = R_A - S_AA, S_BB = R_B - S_AB.
  std::vector<float> mask(total);
  auto statistic = [&](const std::vector<std::size_t>& members) {
    std::fill(mask.begin(), mask.end(), 0.0f);
    double r_a = 0.0;
    for (std::size_t i : members) {
      mask[i] = 1.0f;
      r_a += row_sum[i];
    }
    double s_aa = 0.0;
    for (std::size_t i : members) {
      const float* r = dist.data() + i * total;
      double s = 0.0;
      for (std::size_t j = 0; j < total; ++j) s += static_cast<double>(r[j] * mask[j]);
      s_aa += s;
    }
    const double s_ab = r_a - s_aa;
    const double s_bb = (grand - r_a) - s_ab;
    const double e = 2.0 * s_ab / (nn * mm) - s_aa / (nn * nn) - s_bb / (mm * mm);
    return nn * mm / (nn + mm) * e;
  };

  std::vector<std::size_t> members(n);
  std::iota(members.begin(), members.end(), std::size_t{0});
  TestResult res;
  res.statistic = statistic(members);
  if (permutations <= 0) return res;

  std::vector<std::size_t> perm(total);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterEngine engine(mix64(seed ^ 0xE7E26Eu));
  int at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    // Partial Fisher-Yates: the first n entries are a uniform n-subset.
    for (std::size_t i = 0; i < n; ++i) {
      boost::random::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(perm[i], perm[pick(engine)]);
    }
    members.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
    if (statistic(members) >= res.statistic) ++at_least;
  }
  res.p_value = (1.0 + at_least) / (1.0 + permutations);
  return res;
}

TestResult jarque_bera(std::span<const double> x) {
  const Moments m = moments(x);
  if (m.n < 8) throw ArgumentError("Jarque-Bera needs at least 8 observations");
  long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
  for (double v : x) {
    const long double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= m.n;
  m3 /= m.n;
  m4 /= m.n;
  if (m2 <= 0.0L) return {0.0, 1.0};
  const double skew = static_cast<double>(m3 / std::pow(m2, 1.5L));
  const double kurt = static_cast<double>(m4 / (m2 * m2));
  const double jb = static_cast<double>(m.n) / 6.0 *
                    (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
  return {jb, std::exp(-0.5 * jb)};
}

}  // namespace ibmvar::stats
