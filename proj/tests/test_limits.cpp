#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ibmvar/errors.hpp"
#include "ibmvar/limits.hpp"
#include "ibmvar/stats.hpp"
#include "support.hpp"

using namespace ibmvar;
using testing_support::mean_of;
using testing_support::within_se;

namespace {

// E int (L_1^x)^2 dx = 2 int_0^1 (1 - r) (2 pi r)^{-1/2} dr.
double bmrs_second_moment() {
  boost::math::quadrature::tanh_sinh<double> q;
  return 2.0 * q.integrate([](double r) { return (1.0 - r) / std::sqrt(2.0 * M_PI * r); }, 0.0, 1.0);
}

template <class Draw>
std::vector<std::vector<double>> collect(int n, std::size_t dims, Draw&& draw) {
  std::vector<std::vector<double>> cols(dims);
  for (int r = 0; r < n; ++r) {
    const LimitSample s = draw(static_cast<std::uint64_t>(r));
    for (std::size_t d = 0; d < dims; ++d) cols[d].push_back(s.values[d]);
  }
  return cols;
}

}  // namespace

TEST_CASE("oracle constant") {
  CHECK(bmrs_second_moment() == doctest::Approx(8.0 / 3.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("zero time gives zero") {
  const LimitStreams s(1, 0);
  const auto& cosw = registry_get("cos");
  CHECK(sample_bmrs(s, {0.0, 0.5}).values[0] == 0.0);
  CHECK(sample_wbmrs(cosw, 2, s, {0.0}).values[0] == 0.0);
  CHECK(sample_mixed_odd(cosw, 3, s, {0.0}).values[0] == 0.0);
  CHECK(sample_wiener_at_yt(cosw, 2, s, {0.0}).values[0] == 0.0);
  CHECK(sample_ibm(s, {0.0}).values[0] == 0.0);
  CHECK(sample_gaussian_j_limit(1.0, 0.0, cosw, s, {0.0}).values[0] == 0.0);
}

TEST_CASE("argument checks") {
  const LimitStreams s(1, 0);
  const auto& one = registry_get("one");
  CHECK_THROWS_AS(sample_mixed_odd(one, 4, s, {1.0}), ArgumentError);
  CHECK_THROWS_AS(sample_wiener_at_yt(one, 3, s, {1.0}), ArgumentError);
  CHECK_THROWS_AS(sample_bmrs(s, {1.5}), ArgumentError);
  CHECK_THROWS_AS(sample_ibm(s, {-1.0}), ArgumentError);
}

TEST_CASE("reproducible and finite") {
  const LimitStreams s(3, 17);
  const LimitOptions o{12, {-1.0, 0.5}};
  const auto a = sample_wbmrs(registry_get("cos"), 2, s, {0.5, 1.0}, o);
  const auto b = sample_wbmrs(registry_get("cos"), 2, s, {0.5, 1.0}, o);
  CHECK(a.values == b.values);
  CHECK(a.x_values == b.x_values);
  CHECK(a.x_values.size() == 2);
  for (double v : a.values) CHECK(std::isfinite(v));
  CHECK(a.stream_id == 17);
  CHECK(a.kind == LimitKind::WBMRS);
}

TEST_CASE("weighted scenery with unit weight is a scaled scenery") {
  for (std::uint64_t r = 0; r < 20; ++r) {
    const LimitStreams s(4, r);
    const LimitOptions o{12, {}};
    const auto base = sample_bmrs(s, {0.5, 1.0}, o);
    const auto w2 = sample_wbmrs(registry_get("one"), 2, s, {0.5, 1.0}, o);
    const auto w4 = sample_wbmrs(registry_get("one"), 4, s, {0.5, 1.0}, o);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(w2.values[i] == doctest::Approx(std::sqrt(2.0) * base.values[i]).epsilon(1e-12));
      CHECK(w4.values[i] == doctest::Approx(std::sqrt(96.0) * base.values[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("scenery second moment and self-similarity") {
  const auto cols = collect(10000, 2, [](std::uint64_t r) {
    return sample_bmrs(LimitStreams(5, r), {0.25, 1.0});
  });
  const auto sq1 = testing_support::mean_square(cols[1]);
  MESSAGE("E BMRS(1)^2 = " << sq1.mean << " +- " << sq1.se);
  CHECK(within_se(sq1.mean, bmrs_second_moment(), sq1.se));
  // Var(BMRS(1/4)) / Var(BMRS(1)) = (1/4)^{3/2}; delta-method s.e. from the
  // paired squares.
  const auto sq0 = testing_support::mean_square(cols[0]);
  const double ratio = sq0.mean / sq1.mean;
  std::vector<double> lin;
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    lin.push_back((cols[0][i] * cols[0][i] - ratio * cols[1][i] * cols[1][i]) / sq1.mean);
  }
  const auto lm = mean_of(lin);
  CHECK(within_se(ratio, 0.125, lm.se));
}

TEST_CASE("mixed limit with unit weight") {
  // kappa = 3: 3 X(Y_t) + sqrt(15 - 9) B(Y_t), assembled from the IBM and
  // Wiener samplers on the same streams.
  for (std::uint64_t r = 0; r < 50; ++r) {
    const LimitStreams s(6, r);
    const std::vector<double> times{0.3, 1.0};
    const auto mixed = sample_mixed_odd(registry_get("one"), 3, s, times);
    const auto z = sample_ibm(s, times);
    const auto w = sample_wiener_at_yt(registry_get("one"), 2, s, times);  // sqrt(2) B(Y_t)
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double expect = 3.0 * z.values[i] + std::sqrt(6.0) / std::sqrt(2.0) * w.values[i];
      CHECK(mixed.values[i] == doctest::Approx(expect).epsilon(1e-10));
    }
  }
  // In law it is sqrt(15) times iterated Brownian motion.
  std::vector<double> mixed, ibm;
  for (std::uint64_t r = 0; r < 4000; ++r) {
    mixed.push_back(sample_mixed_odd(registry_get("one"), 3, LimitStreams(7, r), {1.0}).values[0]);
    ibm.push_back(std::sqrt(15.0) * sample_ibm(LimitStreams(8, r), {1.0}).values[0]);
  }
  CHECK(stats::ks_two_sample(mixed, ibm).p_value >= 0.005);
}

TEST_CASE("Wiener integral at Y_t: conditional variance and the gap to the scenery") {
  std::vector<double> normalized, w1, s1;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const LimitStreams s(9, r);
    const double v = sample_wiener_at_yt(registry_get("one"), 2, s, {1.0}).values[0];
    const double u = sample_y_at(s.y, {1.0})[0];
    normalized.push_back(v * v / std::abs(u));
    w1.push_back(v);
  }
  // Given Y_1 = u the value is N(0, 2|u|).
  const auto cv = mean_of(normalized);
  CHECK(within_se(cv.mean, 2.0, cv.se));
  const auto wm = testing_support::mean_square(w1);
  MESSAGE("Var Wiener(1) = " << wm.mean << " +- " << wm.se);
  CHECK(within_se(wm.mean, 2.0 * std::sqrt(2.0 / M_PI), wm.se));
  for (std::uint64_t r = 0; r < 10000; ++r) {
    s1.push_back(sample_wbmrs(registry_get("one"), 2, LimitStreams(10, r), {1.0}).values[0]);
  }
  const auto sm = testing_support::mean_square(s1);
  MESSAGE("Var WBMRS(1) = " << sm.mean << " +- " << sm.se);
  CHECK(within_se(sm.mean, 2.0 * bmrs_second_moment(), sm.se));
}

TEST_CASE("oriented integral over u and -u agree in law") {
  std::vector<double> pos, neg;
  const auto& cosw = registry_get("cos");
  for (std::uint64_t r = 0; r < 4000; ++r) {
    const DyadicLevel level(12);
    SpatialField x = SpatialField::nested(RngStream(11, r, Substream::X), level, -200, 200);
    SpatialField b = SpatialField::nested(RngStream(11, r, Substream::B), level, -200, 200);
    const double u = 0.7;
    const auto bv = sample_field_at(b, std::vector<double>{u, -u});
    pos.push_back(oriented_wiener_integral(cosw, x, b, u, bv[0]));
    neg.push_back(oriented_wiener_integral(cosw, x, b, -u, bv[1]));
  }
  CHECK(stats::ks_two_sample(pos, neg).p_value >= 0.005);
  // Sign convention: int_0^{-u} = -int_{-u}^0, so with f = 1 it is B(-u).
  SpatialField x = SpatialField::nested(RngStream(12, 0, Substream::X), DyadicLevel(8), -40, 40);
  SpatialField b = SpatialField::nested(RngStream(12, 0, Substream::B), DyadicLevel(8), -40, 40);
  const auto bv = sample_field_at(b, std::vector<double>{-0.33});
  CHECK(oriented_wiener_integral(registry_get("one"), x, b, -0.33, bv[0]) ==
        doctest::Approx(bv[0]).epsilon(1e-12));
}

TEST_CASE("Gaussian functional limit scale") {
  const auto& one = registry_get("one");
  const DyadicLevel level(8);
  CHECK(GaussianSumSpec(1, 1, 0, Poly({-1, 0, 1}), one, level, {1.0}).limit_scale() ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(GaussianSumSpec(1, 1, 0, Poly({-3, 0, 0, 0, 1}), one, level, {1.0}).limit_scale() ==
        doctest::Approx(std::sqrt(96.0)));
  // gamma = 0 and a constant polynomial: the limit vanishes.
  const GaussianSumSpec flat(1, 1, 0, Poly({2.0}), one, level, {0.5, 1.0});
  const auto z = sample_gaussian_j_limit(flat, LimitStreams(13, 0));
  CHECK(z.values == std::vector<double>{0.0, 0.0});
  // scale^2 * t for f = 1.
  std::vector<double> v;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    v.push_back(sample_gaussian_j_limit(std::sqrt(15.0), 0.0, one, LimitStreams(14, r), {1.0}).values[0]);
  }
  CHECK(within_se(stats::moments(v).variance, 15.0, stats::variance_std_error(v)));
}

TEST_CASE("iterated Brownian motion moments") {
  const auto cols = collect(10000, 2, [](std::uint64_t r) {
    return sample_ibm(LimitStreams(15, r), {0.25, 1.0});
  });
  const auto z1 = testing_support::mean_square(cols[1]);
  CHECK(within_se(z1.mean, std::sqrt(2.0 / M_PI), z1.se));
  const auto z0 = testing_support::mean_square(cols[0]);
  const double ratio = z0.mean / z1.mean;
  std::vector<double> lin;
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    lin.push_back((cols[0][i] * cols[0][i] - ratio * cols[1][i] * cols[1][i]) / z1.mean);
  }
  CHECK(within_se(ratio, 0.5, mean_of(lin).se));
}

TEST_CASE("scenery is conditionally Gaussian given X and Y") {
  std::vector<double> v;
  LimitStreams s(16, 0);
  for (std::uint64_t r = 0; r < 2000; ++r) {
    s.b = RngStream(17, r, Substream::B);
    v.push_back(sample_wbmrs(registry_get("cos"), 2, s, {1.0}).values[0]);
  }
  CHECK(stats::jarque_bera(v).p_value >= 0.005);
}

TEST_CASE("refinement stability of every sampler") {
  // Same streams at n_lim and n_lim + 2 (spatial mesh halved): the empirical
  // variance at t = 1 moves by less than 2 percent.
  const auto& cosw = registry_get("cos");
  using Sampler = LimitSample (*)(const LimitStreams&, const LimitOptions&);
  struct Case {
    std::string name;
    Sampler draw;
    int replicates;
  };
  static const WeightFunction* w = &cosw;
  const Case cases[] = {
      {"bmrs", [](const LimitStreams& s, const LimitOptions& o) { return sample_bmrs(s, {1.0}, o); }, 2000},
      {"wbmrs", [](const LimitStreams& s, const LimitOptions& o) { return sample_wbmrs(*w, 2, s, {1.0}, o); }, 2000},
      {"mixed_odd", [](const LimitStreams& s, const LimitOptions& o) { return sample_mixed_odd(*w, 3, s, {1.0}, o); }, 10000},
      {"wiener_at_yt", [](const LimitStreams& s, const LimitOptions& o) { return sample_wiener_at_yt(*w, 2, s, {1.0}, o); }, 10000},
      {"gaussian_j", [](const LimitStreams& s, const LimitOptions& o) { return sample_gaussian_j_limit(std::sqrt(2.0), 0.0, *w, s, {1.0}, o); }, 10000},
      {"ibm", [](const LimitStreams& s, const LimitOptions& o) { return sample_ibm(s, {1.0}, o); }, 10000},
  };
  for (const auto& c : cases) {
    std::vector<double> coarse, fine;
    for (int r = 0; r < c.replicates; ++r) {
      const LimitStreams s(18, static_cast<std::uint64_t>(r));
      coarse.push_back(c.draw(s, LimitOptions{16, {}}).values[0]);
      fine.push_back(c.draw(s, LimitOptions{18, {}}).values[0]);
    }
    const double vc = stats::moments(coarse).variance;
    const double vf = stats::moments(fine).variance;
    MESSAGE(c.name << ": var n16 " << vc << ", n18 " << vf);
    CHECK(std::abs(vf / vc - 1.0) < 0.02);
  }
}
