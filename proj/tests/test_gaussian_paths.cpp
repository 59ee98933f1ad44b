#include <doctest.h>

#include <cmath>
#include <vector>

#include "ibmvar/errors.hpp"
#include "ibmvar/gaussian_paths.hpp"
#include "ibmvar/stats.hpp"
#include "support.hpp"

using namespace ibmvar;
using testing_support::within_se;

TEST_CASE("fine path length and anchoring") {
  const RngStream s(11, 0, Substream::Y);
  const FinePath p = sample_fine_path(s, 1.0, 0.5);
  CHECK(p.values.size() == 3);
  CHECK(p.values[0] == 0.0);
  CHECK(p.horizon() == doctest::Approx(1.0));
  CHECK_THROWS_AS(sample_fine_path(s, 0.0, 0.5), ArgumentError);
  CHECK_THROWS_AS(sample_fine_path(s, 1.0, -1.0), ArgumentError);
}

TEST_CASE("fine path step-count overflow names the limit") {
  const RngStream s(11, 0, Substream::Y);
  try {
    sample_fine_path(s, 1.0, 1e-3, 100);
    FAIL("expected a resource error");
  } catch (const ResourceError& e) {
    CHECK(std::string(e.what()).find("100") != std::string::npos);
  }
}

TEST_CASE("endpoint variance equals the horizon") {
  std::vector<double> ends;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    ends.push_back(sample_fine_path(RngStream(3, r, Substream::Y), 2.0, 0.25).values.back());
  }
  const double v = stats::moments(ends).variance;
  CHECK(within_se(v, 2.0, stats::variance_std_error(ends)));
}

TEST_CASE("streams are reproducible and distinct") {
  const FinePath a = sample_fine_path(RngStream(5, 9, Substream::Y), 1.0, 0.01);
  const FinePath b = sample_fine_path(RngStream(5, 9, Substream::Y), 1.0, 0.01);
  const FinePath c = sample_fine_path(RngStream(5, 10, Substream::Y), 1.0, 0.01);
  const FinePath d = sample_fine_path(RngStream(5, 9, Substream::X), 1.0, 0.01);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.values != d.values);
}

TEST_CASE("X and Y substreams are uncorrelated") {
  const int N = 10000;
  std::vector<double> x, y;
  for (int r = 0; r < N; ++r) {
    x.push_back(RngStream(1, r, Substream::X).normal_at(0, 0));
    y.push_back(RngStream(1, r, Substream::Y).normal_at(0, 0));
  }
  const double corr = stats::covariance(x, y) /
                      std::sqrt(stats::moments(x).variance * stats::moments(y).variance);
  CHECK(std::abs(corr) <= 4.0 / std::sqrt(N));
}

TEST_CASE("spatial field anchoring, variance and lazy extension") {
  const RngStream s(8, 1, Substream::X);
  SpatialField f = sample_spatial_field(s, DyadicLevel(2), -1, 1);
  CHECK(f.at(0) == 0.0);
  const double left = f.at(-1), right = f.at(1);
  f.extend(-3, 3);
  CHECK(f.at(-1) == left);
  CHECK(f.at(1) == right);
  // A field built wide from the start agrees on the overlap.
  SpatialField g = sample_spatial_field(s, DyadicLevel(2), -3, 3);
  for (int j = -3; j <= 3; ++j) CHECK(g.at(j) == f.at(j));
  CHECK_THROWS_AS(sample_spatial_field(s, DyadicLevel(2), 1, -1), ArgumentError);

  std::vector<double> up, down;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    SpatialField h = sample_spatial_field(RngStream(2, r, Substream::X), DyadicLevel(2), -1, 1);
    up.push_back(h.at(1));
    down.push_back(h.at(-1));
  }
  CHECK(within_se(stats::moments(up).variance, 0.5, stats::variance_std_error(up)));
  CHECK(within_se(stats::moments(down).variance, 0.5, stats::variance_std_error(down)));
  CHECK(std::abs(stats::covariance(up, down)) / 0.5 <= 4.0 / 100.0);
}

TEST_CASE("prescribed field") {
  SpatialField f = SpatialField::from_values(DyadicLevel(2), -1, {0.7, 0.0, 1.0});
  CHECK(f.at(-1) == 0.7);
  CHECK(f.at(1) == 1.0);
  CHECK_THROWS_AS(f.extend(-2, 1), ArgumentError);
  CHECK_THROWS_AS(SpatialField::from_values(DyadicLevel(2), 0, {1.0}), ArgumentError);
}

TEST_CASE("bridge refinement") {
  const RngStream s(4, 2, Substream::Y);
  const FinePath p = sample_fine_path(s, 1.0, 0.125);
  CHECK_THROWS_AS(refine_bridge(p, 1, s), ArgumentError);
  const FinePath q = refine_bridge(p, 2, s);
  CHECK(q.steps() == 2 * p.steps());
  CHECK(q.mesh == doctest::Approx(p.mesh / 2));
  for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(q.values[2 * i] == p.values[i]);
}

TEST_CASE("bridge midpoint has conditional variance mesh/4") {
  const double mesh = 0.5;
  std::vector<double> dev;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const RngStream s(6, r, Substream::Y);
    const FinePath q = refine_bridge(sample_fine_path(s, mesh, mesh), 2, s);
    dev.push_back(q.values[1] - 0.5 * (q.values[0] + q.values[2]));
  }
  CHECK(within_se(stats::moments(dev).variance, mesh / 4, stats::variance_std_error(dev)));
}

TEST_CASE("refinement leaves the law invariant") {
  // Y(0.25) read off a refined mesh-0.5 path versus a direct mesh-0.25 path.
  std::vector<double> refined, direct;
  for (std::uint64_t r = 0; r < 4000; ++r) {
    const RngStream s(12, r, Substream::Y);
    refined.push_back(refine_bridge(sample_fine_path(s, 1.0, 0.5), 2, s).values[1]);
    direct.push_back(sample_fine_path(RngStream(13, r, Substream::Y), 1.0, 0.25).values[1]);
  }
  CHECK(stats::ks_two_sample(refined, direct).p_value >= 0.005);
}

TEST_CASE("field values off the grid") {
  const RngStream s(21, 0, Substream::X);
  SpatialField f(s, DyadicLevel(4));  // mesh 0.25
  const std::vector<double> pts{0.5, 0.1, -0.3, 0.1};
  const auto v = sample_field_at(f, pts);
  CHECK(v[0] == f.at(2));
  CHECK(v[1] == v[3]);
  // Same point set, same values.
  SpatialField g(s, DyadicLevel(4));
  CHECK(sample_field_at(g, pts) == v);

  std::vector<double> dev;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    SpatialField h(RngStream(22, r, Substream::X), DyadicLevel(4));
    const std::vector<double> mid{0.125};
    dev.push_back(sample_field_at(h, mid)[0] - 0.5 * h.value(1));
  }
  CHECK(within_se(stats::moments(dev).variance, 0.25 / 4, stats::variance_std_error(dev)));
}
