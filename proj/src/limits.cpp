#include "ibmvar/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibmvar/errors.hpp"
#include "ibmvar/hermite.hpp"
#include "ibmvar/localtime.hpp"

namespace ibmvar {

namespace {

void check_times(const std::vector<double>& times, bool unit_interval) {
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t) || (unit_interval && t > 1.0)) {
      throw ArgumentError(unit_interval ? "limit times must lie in [0, 1]"
                                        : "limit times must be finite and >= 0");
    }
  }
}

LimitSample blank(LimitKind kind, const LimitStreams& s,
                  const std::vector<double>& times, const LimitOptions& o) {
  LimitSample out;
  out.kind = kind;
  out.times = times;
  out.values.assign(times.size(), 0.0);
  out.master_seed = s.x.master_seed();
  out.stream_id = s.x.stream_id();
  out.x_sites = o.x_sites;
  return out;
}

std::int64_t cell_floor(double x, double mesh) {
  return static_cast<std::int64_t>(std::floor(x / mesh));
}

// Fixed window [lo, hi] of grid indices covering the origin, the given points
// and `margin` extra cells on both sides.
std::pair<std::int64_t, std::int64_t> cover(const std::vector<double>& points,
                                            double mesh, std::int64_t margin) {
  std::int64_t lo = 0, hi = 0;
  for (double p : points) {
    lo = std::min(lo, cell_floor(p, mesh));
    hi = std::max(hi, cell_floor(p, mesh) + 1);
  }
  return {lo - margin, hi + margin};
}

// Random-scenery integral sum_j w_j L_t[j] (B((j+1/2) eps) - B((j-1/2) eps)),
// one scenery shared by every time. All inputs are nested in the resolution.
LimitSample scenery_integral(LimitKind kind, const WeightFunction* weight,
                             double scale, const LimitStreams& streams,
                             const std::vector<double>& times,
                             const LimitOptions& options) {
  check_times(times, true);
  LimitSample out = blank(kind, streams, times, options);
  const DyadicLevel level(options.level);
  const double horizon = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  std::vector<LocalTimeProfile> profiles;
  std::int64_t jlo = 0, jhi = 0;
  if (horizon > 0.0) {
    const FinePath y = sample_nested_path(streams.y, horizon, level.n());
    profiles = occupation_profiles(y, level, times);
    for (const auto& p : profiles) {
      if (p.values.empty()) continue;
      jlo = std::min(jlo, p.values.lo());
      jhi = std::max(jhi, p.values.hi());
    }
  }
  auto [xlo, xhi] = cover(options.x_sites, level.spatial_mesh(), 1);
  xlo = std::min(xlo, jlo);
  xhi = std::max(xhi, jhi);
  SpatialField xfield = SpatialField::nested(streams.x, level, xlo, xhi);
  if (!options.x_sites.empty()) {
    out.x_values = sample_field_at(xfield, options.x_sites);
  }
  if (horizon <= 0.0) return out;
  const SpatialField bhalf =
      SpatialField::nested(streams.b, DyadicLevel(level.n() + 2), 2 * jlo - 1, 2 * jhi + 1);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CompensatedSum acc;
    profiles[i].values.for_each([&](std::int64_t j, double l) {
      if (l == 0.0) return;
      double w = l * (bhalf.at(2 * j + 1) - bhalf.at(2 * j - 1));
      if (weight != nullptr) w *= weight->f(xfield.at(j));
      acc.add(w);
    });
    out.values[i] = scale * acc.value();
  }
  return out;
}

double root_positive(double v) { return std::sqrt(std::max(v, 0.0)); }

}  // namespace

std::string_view to_string(LimitKind kind) {
  switch (kind) {
    case LimitKind::BMRS: return "bmrs";
    case LimitKind::WBMRS: return "wbmrs";
    case LimitKind::MixedOdd: return "mixed_odd";
    case LimitKind::WienerAtYt: return "wiener_at_yt";
    case LimitKind::GaussianJ: return "gaussian_j";
    case LimitKind::IBM: return "ibm";
  }
  return "unknown";
}

std::vector<double> sample_y_at(const RngStream& y, const std::vector<double>& times) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<double> out(times.size(), 0.0);
  CounterEngine engine = y.engine(30);
  double prev_t = 0.0, prev_y = 0.0;
  for (std::size_t idx : order) {
    const double dt = times[idx] - prev_t;
    if (dt > 0.0) {
      prev_y += std::sqrt(dt) * standard_normal(engine);
      prev_t = times[idx];
    }
    out[idx] = prev_y;
  }
  return out;
}

double oriented_wiener_integral(const WeightFunction& weight, SpatialField& x,
                                SpatialField& b, double u, double b_at_u) {
  if (u == 0.0) return 0.0;
  const double mesh = x.mesh();
  const std::int64_t side = u > 0.0 ? 1 : -1;
  const std::int64_t m = snapped_floor(std::abs(u) / mesh);
  x.extend(std::min<std::int64_t>(0, side * m), std::max<std::int64_t>(0, side * m));
  b.extend(std::min<std::int64_t>(0, side * (m + 1)), std::max<std::int64_t>(0, side * (m + 1)));
  CompensatedSum acc;
  for (std::int64_t j = 0; j < m; ++j) {
    acc.add(weight.f(x.at(side * j)) * (b.at(side * (j + 1)) - b.at(side * j)));
  }
  const double rest = std::abs(u) - static_cast<double>(m) * mesh;
  if (rest > 1e-12 * mesh) acc.add(weight.f(x.at(side * m)) * (b_at_u - b.at(side * m)));
  return acc.value();
}

LimitSample sample_bmrs(const LimitStreams& streams,
                        const std::vector<double>& times,
                        const LimitOptions& options) {
  return scenery_integral(LimitKind::BMRS, nullptr, 1.0, streams, times, options);
}

LimitSample sample_wbmrs(const WeightFunction& weight, int kappa,
                         const LimitStreams& streams,
                         const std::vector<double>& times,
                         const LimitOptions& options) {
  if (kappa < 2) throw ArgumentError("kappa must be >= 2");
  const double scale =
      root_positive(gaussian_moment(2 * kappa) - std::pow(gaussian_moment(kappa), 2));
  return scenery_integral(LimitKind::WBMRS, &weight, scale, streams, times, options);
}

namespace {

// c_strat F(X_u) + c_wiener int_0^u f(X) dB at each point u, with X also
// reported at the option's sites. All X and B evaluations come from a single
// joint bridge fill so the values are mutually consistent.
LimitSample integrals_at(LimitKind kind, const WeightFunction& weight,
                         double c_strat, double c_wiener,
                         const LimitStreams& streams,
                         const std::vector<double>& times,
                         const std::vector<double>& points,
                         const LimitOptions& options) {
  LimitSample out = blank(kind, streams, times, options);
  const DyadicLevel level(options.level);
  std::vector<double> xpts = points;
  xpts.insert(xpts.end(), options.x_sites.begin(), options.x_sites.end());
  const auto [lo, hi] = cover(xpts, level.spatial_mesh(), 2);
  SpatialField xfield = SpatialField::nested(streams.x, level, lo, hi);
  SpatialField bfield = SpatialField::nested(streams.b, level, lo, hi);
  xpts = points;
  xpts.insert(xpts.end(), options.x_sites.begin(), options.x_sites.end());
  const std::vector<double> xv = sample_field_at(xfield, xpts);
  out.x_values.assign(xv.begin() + static_cast<std::ptrdiff_t>(points.size()), xv.end());
  std::vector<double> bv;
  if (c_wiener != 0.0) bv = sample_field_at(bfield, points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double v = 0.0;
    if (c_strat != 0.0) v += c_strat * weight.F(xv[i]);
    if (c_wiener != 0.0) {
      v += c_wiener * oriented_wiener_integral(weight, xfield, bfield, points[i], bv[i]);
    }
    out.values[i] = v;
  }
  return out;
}

}  // namespace

LimitSample sample_mixed_odd(const WeightFunction& weight, int kappa,
                             const LimitStreams& streams,
                             const std::vector<double>& times,
                             const LimitOptions& options) {
  if (kappa < 3 || kappa % 2 == 0) throw ArgumentError("mixed limit needs odd kappa >= 3");
  check_times(times, true);
  const double m1 = gaussian_moment(kappa + 1);
  const double c = root_positive(gaussian_moment(2 * kappa) - m1 * m1);
  return integrals_at(LimitKind::MixedOdd, weight, m1, c, streams, times,
                      sample_y_at(streams.y, times), options);
}

LimitSample sample_wiener_at_yt(const WeightFunction& weight, int kappa,
                                const LimitStreams& streams,
                                const std::vector<double>& times,
                                const LimitOptions& options) {
  if (kappa < 2 || kappa % 2 != 0) throw ArgumentError("Wiener limit needs even kappa");
  check_times(times, true);
  const double c = root_positive(gaussian_moment(2 * kappa) -
                                 std::pow(gaussian_moment(kappa), 2));
  return integrals_at(LimitKind::WienerAtYt, weight, 0.0, c, streams, times,
                      sample_y_at(streams.y, times), options);
}

LimitSample sample_gaussian_j_limit(double scale, double stratonovich,
                                    const WeightFunction& weight,
                                    const LimitStreams& streams,
                                    const std::vector<double>& times,
                                    const LimitOptions& options) {
  check_times(times, false);
  return integrals_at(LimitKind::GaussianJ, weight, stratonovich, scale, streams,
                      times, times, options);
}

LimitSample sample_gaussian_j_limit(const GaussianSumSpec& spec,
                                    const LimitStreams& streams,
                                    const LimitOptions& options) {
  return sample_gaussian_j_limit(spec.limit_scale(), 0.0, spec.weight, streams,
                                 spec.times, options);
}

LimitSample sample_ibm(const LimitStreams& streams,
                       const std::vector<double>& times,
                       const LimitOptions& options) {
  check_times(times, false);
  static const WeightFunction& one = registry_get("one");
  return integrals_at(LimitKind::IBM, one, 1.0, 0.0, streams, times,
                      sample_y_at(streams.y, times), options);
}

}  // namespace ibmvar
