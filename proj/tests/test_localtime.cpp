#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ibmvar/errors.hpp"
#include "ibmvar/localtime.hpp"
#include "ibmvar/skeleton.hpp"
#include "ibmvar/stats.hpp"
#include "support.hpp"

using namespace ibmvar;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("zero time gives an empty profile") {
  const FinePath p = sample_fine_path(RngStream(1, 0, Substream::Y), 1.0, 1e-3);
  const LocalTimeProfile L = occupation_profile(p, DyadicLevel(8), 0.0);
  double s = 0.0;
  L.values.for_each([&](std::int64_t, double v) { s += std::abs(v); });
  CHECK(s == 0.0);
  CHECK(L.total() == 0.0);
  CHECK_THROWS_AS(occupation_profile(p, DyadicLevel(8), 1.5), ArgumentError);
}

TEST_CASE("occupation by hand") {
  // Straight line 0 -> 1 in unit time, bins of width 0.5 centred on 0, 0.5, 1.
  const FinePath p{1.0, {0.0, 1.0}};
  const LocalTimeProfile L = occupation_profile(p, DyadicLevel(2), 1.0);
  CHECK(L.values.at(0) == doctest::Approx(0.5));  // 0.25 time units / 0.5
  CHECK(L.values.at(1) == doctest::Approx(1.0));
  CHECK(L.values.at(2) == doctest::Approx(0.5));
  CHECK(L.total() == doctest::Approx(1.0));
}

TEST_CASE("normalization, sign and support on every replicate") {
  for (std::uint64_t r = 0; r < 100; ++r) {
    const FinePath p = sample_fine_path(RngStream(2, r, Substream::Y), 1.0, std::exp2(-12));
    const DyadicLevel level(10);
    const double eps = level.spatial_mesh();
    const auto [mn, mx] = std::minmax_element(p.values.begin(), p.values.end());
    const auto profiles = occupation_profiles(p, level, {0.3, 1.0});
    CHECK(profiles[0].total() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(profiles[1].total() == doctest::Approx(1.0).epsilon(1e-12));
    profiles[1].values.for_each([&](std::int64_t j, double v) {
      REQUIRE(v >= 0.0);
      const double x = static_cast<double>(j) * eps;
      if (x < *mn - eps || x > *mx + eps) REQUIRE(v == 0.0);
    });
  }
}

TEST_CASE("local time at zero has mean sqrt(2/pi)") {
  std::vector<double> l0;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const FinePath p = sample_fine_path(RngStream(3, r, Substream::Y), 1.0, std::exp2(-14));
    l0.push_back(occupation_profile(p, DyadicLevel(10), 1.0).values.at(0));
  }
  const auto m = testing_support::mean_of(l0);
  MESSAGE("E L_1^0 = " << m.mean << " +- " << m.se);
  CHECK(testing_support::within_se(m.mean, std::sqrt(2.0 / M_PI), m.se));
}

TEST_CASE("gaussian tail envelope of the expected local time") {
  // E L_1^x <= 2 E L_1^0 exp(-x^2/2).
  const DyadicLevel level(8);
  const std::vector<double> xs{0.0, 0.5, 1.0, 2.0};
  std::vector<std::vector<double>> vals(xs.size());
  for (std::uint64_t r = 0; r < 4000; ++r) {
    const FinePath p = sample_fine_path(RngStream(4, r, Substream::Y), 1.0, std::exp2(-12));
    const LocalTimeProfile L = occupation_profile(p, level, 1.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      vals[i].push_back(L.values.at(level.cells_until(xs[i])));
    }
  }
  const double l0 = std::sqrt(2.0 / M_PI);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto m = testing_support::mean_of(vals[i]);
    CHECK(m.mean <= 2.0 * l0 * std::exp(-xs[i] * xs[i] / 2.0) + 3 * m.se);
  }
}

TEST_CASE("skeletal gap trivial and level mismatch") {
  const LocalTimeProfile empty{DyadicLevel(4), 0.0, 0.25, {}};
  const SkeletalGap g = skeletal_vs_true(empty, CrossingTally{DyadicLevel(4), {}, {}, 0});
  CHECK(g.sup_gap == 0.0);
  CHECK(g.weighted_gap == 0.0);
  CHECK_THROWS_AS(skeletal_vs_true(empty, CrossingTally{DyadicLevel(6), {}, {}, 0}), ArgumentError);
}

TEST_CASE("skeletal local time approaches the true one at the stated rate") {
  std::vector<double> med, scaled;
  for (int n : {8, 12, 16}) {
    const DyadicLevel level(n);
    std::vector<double> gaps;
    for (std::uint64_t r = 0; r < 500; ++r) {
      const CoupledWalk cw = sample_coupled_walk(RngStream(5, r, Substream::Y), level, 1.0);
      const LocalTimeProfile L = occupation_profile(cw.path, level, 1.0);
      gaps.push_back(skeletal_vs_true(L, tally_crossings(cw.walk, 1.0)).weighted_gap);
    }
    med.push_back(median(gaps));
    scaled.push_back(med.back() / (n * std::exp2(-n / 4.0)));
    MESSAGE("n=" << n << " median weighted gap " << med.back() << " scaled " << scaled.back());
  }
  CHECK(med[0] > med[1]);
  CHECK(med[1] > med[2]);
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  CHECK(*hi <= 3.0 * *lo);
}
