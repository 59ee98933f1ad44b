#include <doctest.h>

#include <cmath>
#include <vector>

#include "ibmvar/errors.hpp"
#include "ibmvar/skeleton.hpp"
#include "ibmvar/stats.hpp"
#include "ibmvar/variations.hpp"
#include "support.hpp"

using namespace ibmvar;

namespace {

EmbeddedWalk walk_of(int n, std::vector<std::int64_t> positions) {
  EmbeddedWalk w;
  w.level = DyadicLevel(n);
  w.positions = std::move(positions);
  return w;
}

VariationSpec spec_of(int kappa, int n, const std::string& weight, std::vector<double> times) {
  return make_variation_spec(kappa, n, weight, std::move(times));
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(spec_of(1, 4, "one", {1.0}), ArgumentError);
  CHECK_THROWS_AS(spec_of(2, 4, "one", {}), ArgumentError);
  CHECK_THROWS_AS(spec_of(2, 4, "one", {1.5}), ArgumentError);
  CHECK_THROWS_AS(spec_of(2, 4, "one", {1.0, 0.5}), ArgumentError);
  CHECK(spec_of(4, 8, "one", {1.0}).centering() == doctest::Approx(3.0 * std::exp2(-8.0)));
}

TEST_CASE("time sum by hand") {
  // f = 1, kappa = 2, walk 0 -> 1 -> 0, X_1 = 1, n = 2: centering 2^{-1}.
  SpatialField x = SpatialField::from_values(DyadicLevel(2), 0, {0.0, 1.0});
  const auto v = v_time_sum(spec_of(2, 2, "one", {0.0, 0.5}), walk_of(2, {0, 1, 0}), x);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == doctest::Approx(1.0));
  CHECK(v_space_sum(spec_of(2, 2, "one", {0.5}), walk_of(2, {0, 1, 0}), x)[0] ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(v_time_sum(spec_of(2, 2, "one", {1.0}), walk_of(2, {0, 1, 0}), x),
                  ArgumentError);
}

TEST_CASE("empty tallies give zero") {
  SpatialField x(RngStream(1, 0, Substream::X), DyadicLevel(4));
  CHECK(v_space_sum(spec_of(2, 4, "cos", {0.0}), CrossingTally{DyadicLevel(4), {}, {}, 0}, x) == 0.0);
  CHECK(s_space_sum(spec_of(2, 4, "cos", {0.0}), DoubledTally{DyadicLevel(4), {}, {}, {}, {}, 0}, x) ==
        0.0);
}

TEST_CASE("signed variation by hand") {
  const double a = 0.7, b = -0.4;
  SpatialField x = SpatialField::from_values(DyadicLevel(2), 0, {0.0, a, b});
  const EmbeddedWalk w = walk_of(2, {0, 1, 2});
  const auto s = s_sum(spec_of(2, 2, "one", {0.5}), w, x);
  CHECK(s[0] == doctest::Approx((b - a) * (b - a) - a * a));
  const auto s3 = s_sum(spec_of(3, 2, "cos", {0.5}), w, x);
  CHECK(s3[0] == doctest::Approx(std::cos(a) * (std::pow(b - a, 3) + std::pow(a, 3))));
  CHECK(s_space_sum(spec_of(3, 2, "cos", {0.5}), w, x)[0] == doctest::Approx(s3[0]));

  // Literal bound floor((2^{n/2} t - 1)/2): empty at t = 0, one pair at t = 1/2, n = 2.
  VariationSpec lit = spec_of(2, 2, "one", {0.0, 0.5});
  lit.literal_s_bound = true;
  const auto sl = s_sum(lit, w, x);
  CHECK(sl[0] == 0.0);
  CHECK(sl[1] == doctest::Approx((b - a) * (b - a) - a * a));
}

TEST_CASE("one-sided sums by hand") {
  const double a = 0.3, b = 1.1;
  const int n = 2;
  SpatialField x = SpatialField::from_values(DyadicLevel(n), -1, {-0.5, 0.0, a, b});
  const VariationSpec spec = spec_of(3, n, "one", {1.0});
  CHECK(j_one_sided(spec, x, 0.0) == 0.0);
  // Two grid steps on the positive side: u = 2 * 2^{-1}.
  const double expect = std::exp2(n / 2.0) * 0.5 * (2 * a * a * a + 2 * std::pow(b - a, 3));
  CHECK(j_one_sided(spec, x, 1.0) == doctest::Approx(expect));
  // Reflected side: X^-(s) = X(-s).
  CHECK(j_one_sided(spec, x, -0.5) == doctest::Approx(std::exp2(n / 2.0) * std::pow(-0.5, 3)));
  CHECK(j_tilde_one_sided(spec, x, 1.0) ==
        doctest::Approx(std::exp2(n / 2.0) * (std::pow(b - a, 3) + std::pow(a, 3))));
  CHECK(j_tilde_one_sided(spec, x, 0.5) == 0.0);
}

TEST_CASE("exact identities on random instances") {
  for (int trial = 0; trial < 200; ++trial) {
    const int kappa = 2 + trial % 5;
    const int n = 4 + 4 * ((trial / 5) % 3);
    const auto names = registry_names();
    const std::string wname = names[static_cast<std::size_t>(trial) % names.size()];
    CAPTURE(trial);
    CAPTURE(kappa);
    CAPTURE(n);
    CAPTURE(wname);
    const DyadicLevel level(n);
    const EmbeddedWalk w = simulate_walk(RngStream(9, trial, Substream::Y), level, 1.0);
    SpatialField x(RngStream(9, trial, Substream::X), level);
    const double tt = 0.1 + 0.9 * static_cast<double>((trial * 37) % 101) / 101.0;
    const VariationSpec spec = spec_of(kappa, n, wname, {tt, 1.0});
    const auto vt = v_time_sum(spec, w, x);
    const auto vs = v_space_sum(spec, w, x);
    const auto st = s_sum(spec, w, x);
    const auto ss = s_space_sum(spec, w, x);
    for (std::size_t i = 0; i < 2; ++i) {
      const double magnitude = 1e-6 * (std::abs(vt[i]) + 1.0);
      CHECK(std::abs(vt[i] - vs[i]) <= 1e-9 * std::max(std::abs(vt[i]), magnitude));
      CHECK(std::abs(st[i] - ss[i]) <= 1e-9 * std::max({std::abs(st[i]), 1e-6}));
      const double t = spec.times[i];
      const TerminalIndices ti = terminal_indices(w, level, t);
      if (kappa % 2 == 1) {
        const double lhs = level.pow_quarter(kappa - 1) * vt[i];
        const double rhs = j_one_sided(spec, x, ti.y_n_t);
        CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max({std::abs(lhs), std::abs(rhs), 1e-6}));
      }
      const double lhs2 = level.pow_quarter(kappa - 1) * st[i];
      const double rhs2 = j_tilde_one_sided(spec, x, 2.0 * ti.j_tilde * level.spatial_mesh());
      CHECK(std::abs(lhs2 - rhs2) <= 1e-9 * std::max({std::abs(lhs2), std::abs(rhs2), 1e-6}));
    }
  }
}

TEST_CASE("reflecting walk and field leaves the variation unchanged") {
  // w -> -w together with X(j) -> X(-j) keeps Z, checked through the tally form.
  const DyadicLevel level(2);
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<std::int64_t> pos{0}, neg{0};
    for (int k = 0; k < 4; ++k) {
      const int step = (mask >> k) & 1 ? 1 : -1;
      pos.push_back(pos.back() + step);
      neg.push_back(neg.back() - step);
    }
    std::vector<double> wide(9, 0.0), wide_m(9, 0.0);
    for (int j = -4; j <= 4; ++j) {
      const double v = std::sin(1.7 * j) + 0.3 * j;
      wide[static_cast<std::size_t>(j + 4)] = j == 0 ? 0.0 : v;
      wide_m[static_cast<std::size_t>(4 - j)] = j == 0 ? 0.0 : v;
    }
    SpatialField x = SpatialField::from_values(level, -4, wide);
    SpatialField xm = SpatialField::from_values(level, -4, wide_m);
    for (int kappa : {2, 4}) {
      const VariationSpec spec = spec_of(kappa, 2, "cos", {1.0});
      const double a = v_space_sum(spec, walk_of(2, pos), x)[0];
      const double b = v_space_sum(spec, walk_of(2, neg), xm)[0];
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("linearity in the weight") {
  const DyadicLevel level(8);
  WeightFunction mix{"mix",
                     [](double x) { return 2.0 * std::cos(x) - 0.5 * std::sin(x); },
                     nullptr, nullptr, nullptr, true, 0, 0};
  const EmbeddedWalk w = simulate_walk(RngStream(10, 0, Substream::Y), level, 1.0);
  SpatialField x(RngStream(10, 0, Substream::X), level);
  VariationSpec spec = spec_of(3, 8, "cos", {0.5, 1.0});
  const auto vc = v_time_sum(spec, w, x);
  spec.weight = registry_get("sin");
  const auto vs = v_time_sum(spec, w, x);
  spec.weight = mix;
  const auto vm = v_time_sum(spec, w, x);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(rel_err(vm[i], 2.0 * vc[i] - 0.5 * vs[i]) <= 1e-10);
  }
}

TEST_CASE("odd power with unit weight telescopes to a one-sided sum") {
  for (int r = 0; r < 50; ++r) {
    const DyadicLevel level(10);
    const EmbeddedWalk w = simulate_walk(RngStream(11, r, Substream::Y), level, 1.0);
    SpatialField x(RngStream(11, r, Substream::X), level);
    const VariationSpec spec = spec_of(5, 10, "one", {1.0});
    const double v = v_time_sum(spec, w, x)[0] * level.pow_quarter(4);
    const std::int64_t js = w.positions.back();
    CompensatedSum direct;
    for (std::int64_t j = 1; j <= std::abs(js); ++j) {
      const std::int64_t s = js > 0 ? 1 : -1;
      direct.add(ipow(x.value(s * j) - x.value(s * (j - 1)), 5));
    }
    CHECK(rel_err(v, level.pow_quarter(4) * direct.value()) <= 1e-9);
  }
}

TEST_CASE("conditional centering given the walk") {
  const DyadicLevel level(8);
  const EmbeddedWalk w = simulate_walk(RngStream(12, 0, Substream::Y), level, 1.0);
  for (int kappa : {2, 4}) {
    const VariationSpec spec = spec_of(kappa, 8, "one", {1.0});
    std::vector<double> v;
    for (std::uint64_t r = 0; r < 4000; ++r) {
      SpatialField x(RngStream(13, r, Substream::X), level);
      v.push_back(v_time_sum(spec, w, x)[0]);
    }
    const auto m = testing_support::mean_of(v);
    CHECK(std::abs(m.mean) <= 3 * m.se);
  }
}

TEST_CASE("gaussian functional by hand") {
  const int n = 2;
  const double up = std::exp2(n / 4.0);
  const double x1 = 0.6, x2 = -0.1;
  const double g1 = up * x1, g2 = up * (x2 - x1);
  SpatialField x = SpatialField::from_values(DyadicLevel(n), 0, {0.0, x1, x2});
  const GaussianSumSpec spec(1, 1, 0, Poly({-1, 0, 1}), registry_get("one"), DyadicLevel(n),
                          {0.3, 1.0});
  const auto j = j_gaussian(spec, x);
  CHECK(j[0] == 0.0);
  CHECK(j[1] == doctest::Approx(0.5 / up * (2 * (g1 * g1 - 1) + 2 * (g2 * g2 - 1))));
  // The trapezoid preset is the same functional.
  const auto p = gaussian_preset(GaussianPreset::TrapezoidPower, 2, registry_get("one"),
                                 DyadicLevel(n), {1.0}, x);
  CHECK(p[0] == doctest::Approx(j[1]));
  CHECK_THROWS_AS(GaussianSumSpec(1, 1, 0, Poly({0, 0, 0, 1}), registry_get("one"), DyadicLevel(n),
                               {1.0}),
                  ArgumentError);
}

TEST_CASE("pair presets match direct sums") {
  const DyadicLevel level(8);
  SpatialField x(RngStream(14, 0, Substream::X), level);
  const auto& w = registry_get("cos");
  for (int kappa : {2, 3, 4}) {
    const std::vector<double> times{0.3, 1.0};
    const auto diff = gaussian_preset(GaussianPreset::PairDifference, kappa, w, level, times, x);
    const auto sum = gaussian_preset(GaussianPreset::PairSum, kappa, w, level, times, x);
    const auto alt = gaussian_preset(GaussianPreset::AlternatingPower, kappa, w, level, times, x);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double c = std::exp2(0.5 * level.n()) * times[i];
      const auto m = static_cast<std::int64_t>(std::floor(0.5 * (c - 1.0)));
      double d = 0, s = 0;
      for (std::int64_t j = 1; j <= m; ++j) {
        const double a = std::pow(x.value(2 * j + 2) - x.value(2 * j + 1), kappa);
        const double b = std::pow(x.value(2 * j + 1) - x.value(2 * j), kappa);
        d += std::cos(x.value(2 * j + 1)) * (a - b);
        s += std::cos(x.value(2 * j + 1)) * (a + b);
      }
      const double scale = level.pow_quarter(kappa - 1);
      CHECK(rel_err(diff[i], scale * d) <= 1e-10);
      CHECK(rel_err(sum[i], scale * s) <= 1e-10);
      double al = 0;
      for (std::int64_t j = 1; j <= static_cast<std::int64_t>(std::floor(c)); ++j) {
        al += 0.5 * (std::cos(x.value(j - 1)) + std::cos(x.value(j))) * (j % 2 ? -1.0 : 1.0) *
              std::pow(x.value(j) - x.value(j - 1), kappa);
      }
      CHECK(rel_err(alt[i], scale * al) <= 1e-10);
    }
  }
}

TEST_CASE("block sums on a zero path") {
  const DyadicLevel level(4);  // 4 cells per block
  const double alpha = std::sqrt(2.0), beta = 0.5;
  SpatialField zero = SpatialField::from_values(level, 0, std::vector<double>(9, 0.0));
  const GaussianSumSpec spec(alpha, beta, 0, Poly({-1, 0, 1}), registry_get("one"), level, {1.0});
  const auto m = m_blocks(spec, 2, zero);
  REQUIRE(m.size() == 4);
  // P(0) - E P(G) = -1 on every cell, two even and two odd cells per block.
  const double expect = std::exp2(-1.0) * 2 * (alpha + beta) * (-1.0);
  CHECK(m[0] == doctest::Approx(expect));
  CHECK(m[1] == doctest::Approx(expect));
  CHECK(m[2] == 0.0);
  CHECK(m[3] == 0.0);
}

TEST_CASE("block variance and independence at moderate resolution") {
  const DyadicLevel level(8);
  const GaussianSumSpec spec(std::sqrt(2.0), 0, 0, Poly({-1, 0, 1}), registry_get("one"), level, {1.0});
  std::vector<double> m1, mn1;
  for (std::uint64_t r = 0; r < 4000; ++r) {
    SpatialField x(RngStream(15, r, Substream::X), level);
    const auto m = m_blocks(spec, 1, x);
    m1.push_back(m[0]);
    mn1.push_back(m[1]);
  }
  // (alpha^2 + beta^2)/2 Var(G^2 - 1) = 2.
  CHECK(testing_support::within_se(stats::moments(m1).variance, 2.0, stats::variance_std_error(m1)));
  std::vector<double> prod;
  for (std::size_t i = 0; i < m1.size(); ++i) prod.push_back(m1[i] * mn1[i]);
  const auto c = testing_support::mean_of(prod);
  CHECK(std::abs(c.mean) <= 3 * c.se);
}
