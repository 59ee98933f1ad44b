#include "ibmvar/gaussian_paths.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "ibmvar/errors.hpp"

namespace ibmvar {

namespace {

constexpr std::uint64_t kPathLane = 0;
constexpr std::uint64_t kFieldPositiveLane = 10;
constexpr std::uint64_t kFieldNegativeLane = 11;
constexpr std::uint64_t kFieldBridgeLane = 12;
constexpr std::uint64_t kNestedFieldLane = 40;   // + level
constexpr std::uint64_t kNestedPathLane = 100;   // + depth
constexpr int kNestedPathBase = 4;

}  // namespace

double FinePath::at_time(double s) const {
  if (values.empty()) throw ArgumentError("empty path");
  if (s <= 0.0) return values.front();
  const double pos = s / mesh;
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

FinePath sample_fine_path(const RngStream& stream, double horizon, double mesh,
                          std::size_t max_steps) {
  if (!(horizon > 0.0) || !(mesh > 0.0)) {
    throw ArgumentError("fine path needs horizon > 0 and mesh > 0");
  }
  const double ratio = horizon / mesh;
  if (ratio > static_cast<double>(max_steps)) {
    throw ResourceError("fine path would need " + std::to_string(ratio) +
                        " steps, above the limit of " +
                        std::to_string(max_steps));
  }
  const auto steps = static_cast<std::size_t>(snapped_floor(ratio));
  FinePath path;
  path.mesh = mesh;
  path.values.resize(steps + 1);
  path.values[0] = 0.0;
  const double sd = std::sqrt(mesh);
  CounterEngine engine = stream.engine(kPathLane);
  double y = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    y += sd * standard_normal(engine);
    path.values[i] = y;
  }
  return path;
}

FinePath refine_bridge(const FinePath& path, int factor,
                       const RngStream& stream, std::uint64_t lane) {
  if (factor < 2) throw ArgumentError("bridge refinement factor must be >= 2");
  if (path.values.empty()) throw ArgumentError("cannot refine an empty path");
  const std::size_t steps = path.steps();
  const auto f = static_cast<std::size_t>(factor);
  if (steps > kDefaultMaxPathSteps / f) {
    throw ResourceError("refined path would exceed " +
                        std::to_string(kDefaultMaxPathSteps) + " steps");
  }
  FinePath out;
  out.mesh = path.mesh / factor;
  out.values.resize(steps * f + 1);
  CounterEngine engine = stream.engine(lane);
  for (std::size_t i = 0; i < steps; ++i) {
    const double right = path.values[i + 1];
    double left = path.values[i];
    out.values[i * f] = left;
    for (std::size_t k = 1; k < f; ++k) {
      // Bridge from `left` (time 0) to `right` (remaining r sub-steps).
      const double r = static_cast<double>(f - k + 1);
      const double mean = left + (right - left) / r;
      const double var = out.mesh * (r - 1.0) / r;
      left = mean + std::sqrt(var) * standard_normal(engine);
      out.values[i * f + k] = left;
    }
  }
  out.values.back() = path.values.back();
  return out;
}

FinePath sample_nested_path(const RngStream& stream, double horizon,
                            int exponent) {
  if (!(horizon > 0.0)) throw ArgumentError("nested path needs horizon > 0");
  if (exponent < 0 || exponent > 40) {
    throw ArgumentError("nested path exponent must lie in [0, 40]");
  }
  if (std::ldexp(horizon, exponent) > static_cast<double>(kDefaultMaxPathSteps)) {
    throw ResourceError("nested path would exceed " +
                        std::to_string(kDefaultMaxPathSteps) + " steps");
  }
  const int base = std::min(exponent, kNestedPathBase);
  const double base_mesh = std::ldexp(1.0, -base);
  const double covered = base_mesh * std::ceil(horizon / base_mesh - 1e-9);
  FinePath path = sample_fine_path(stream, covered, base_mesh);
  for (int e = base + 1; e <= exponent; ++e) {
    path = refine_bridge(path, 2, stream, kNestedPathLane + static_cast<std::uint64_t>(e));
  }
  return path;
}

SpatialField SpatialField::nested(const RngStream& stream, DyadicLevel level,
                                  std::int64_t lo, std::int64_t hi) {
  if (lo > 0 || hi < 0) {
    throw ArgumentError("nested field window must contain the origin");
  }
  const int n = level.n();
  int m = n % 2 == 0 ? 2 : 1;
  const int shift = (n - m) / 2;  // halvings from the base grid
  auto floor_shift = [](std::int64_t j, int k) { return j >> k; };
  auto ceil_shift = [](std::int64_t j, int k) { return -((-j) >> k); };
  SpatialField base(stream, DyadicLevel(m));
  std::int64_t wlo = floor_shift(lo, shift), whi = ceil_shift(hi, shift);
  std::vector<double> vals = base.window(wlo, whi);
  for (int k = shift - 1; k >= 0; --k) {
    m += 2;
    const double h = DyadicLevel(m).spatial_mesh();
    const double sd = std::sqrt(0.5 * h);
    const std::int64_t nlo = floor_shift(lo, k), nhi = ceil_shift(hi, k);
    std::vector<double> next(static_cast<std::size_t>(nhi - nlo + 1));
    for (std::int64_t j = nlo; j <= nhi; ++j) {
      const auto at = [&](std::int64_t c) { return vals[static_cast<std::size_t>(c - wlo)]; };
      double v;
      if (j % 2 == 0) {
        v = at(j / 2);
      } else {
        const std::int64_t left = floor_shift(j, 1);
        v = 0.5 * (at(left) + at(left + 1)) +
            sd * stream.normal_at(kNestedFieldLane + static_cast<std::uint64_t>(m), zigzag(j));
      }
      next[static_cast<std::size_t>(j - nlo)] = v;
    }
    vals = std::move(next);
    wlo = nlo;
    whi = nhi;
  }
  SpatialField f = from_values(level, wlo, vals);
  f.stream_ = stream;
  return f;
}

SpatialField::SpatialField(const RngStream& stream, DyadicLevel level)
    : stream_(stream),
      level_(level),
      mesh_(level.spatial_mesh()),
      step_sd_(std::sqrt(level.spatial_mesh())),
      positive_engine_(stream.engine(kFieldPositiveLane)),
      negative_engine_(stream.engine(kFieldNegativeLane)),
      positive_{0.0},
      negative_{0.0} {}

SpatialField SpatialField::from_values(DyadicLevel level, std::int64_t lo,
                                      const std::vector<double>& values) {
  const std::int64_t hi = lo + static_cast<std::int64_t>(values.size()) - 1;
  if (lo > 0 || hi < 0) {
    throw ArgumentError("prescribed field window must contain the origin");
  }
  if (values[static_cast<std::size_t>(-lo)] != 0.0) {
    throw ArgumentError("prescribed field must vanish at the origin");
  }
  SpatialField f(RngStream(0, 0, Substream::X), level);
  f.positive_.assign(values.begin() - lo, values.end());
  f.negative_.clear();
  for (std::int64_t j = 0; j >= lo; --j) {
    f.negative_.push_back(values[static_cast<std::size_t>(j - lo)]);
  }
  f.fixed_ = true;
  return f;
}

void SpatialField::extend(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) {
    throw ArgumentError("field window needs lo <= hi, got [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (fixed_ && (lo < this->lo() || hi > this->hi())) {
    throw ArgumentError("prescribed field covers [" + std::to_string(this->lo()) +
                        ", " + std::to_string(this->hi()) + "], asked for [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (hi > 0) {
    const auto want = static_cast<std::size_t>(hi) + 1;
    if (want > kDefaultMaxPathSteps) throw ResourceError("field too wide");
    positive_.reserve(want);
    while (positive_.size() < want) {
      positive_.push_back(positive_.back() +
                          step_sd_ * standard_normal(positive_engine_));
    }
  }
  if (lo < 0) {
    const auto want = static_cast<std::size_t>(-lo) + 1;
    if (want > kDefaultMaxPathSteps) throw ResourceError("field too wide");
    negative_.reserve(want);
    while (negative_.size() < want) {
      negative_.push_back(negative_.back() +
                          step_sd_ * standard_normal(negative_engine_));
    }
  }
}

std::vector<double> SpatialField::window(std::int64_t lo, std::int64_t hi) {
  extend(std::min<std::int64_t>(lo, 0), std::max<std::int64_t>(hi, 0));
  std::vector<double> out(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t j = lo; j <= hi; ++j) {
    out[static_cast<std::size_t>(j - lo)] = at(j);
  }
  return out;
}

SpatialField sample_spatial_field(const RngStream& stream, DyadicLevel level,
                                  std::int64_t lo, std::int64_t hi) {
  if (lo > hi) {
    throw ArgumentError("spatial field needs lo <= hi");
  }
  if (lo > 0 || hi < 0) {
    throw ArgumentError("spatial field window must contain the origin");
  }
  SpatialField field(stream, level);
  field.extend(lo, hi);
  return field;
}

std::vector<double> sample_field_at(SpatialField& field,
                                    std::span<const double> points) {
  std::vector<double> out(points.size());
  const double mesh = field.mesh();
  // cell -> indices of the points strictly inside it
  std::map<std::int64_t, std::vector<std::size_t>> interior;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double scaled = points[i] / mesh;
    if (!std::isfinite(scaled)) throw ArgumentError("non-finite field point");
    const double r = std::round(scaled);
    if (std::abs(scaled - r) <= 1e-12 * std::max(1.0, std::abs(scaled))) {
      out[i] = field.value(static_cast<std::int64_t>(r));
      continue;
    }
    interior[static_cast<std::int64_t>(std::floor(scaled))].push_back(i);
  }
  for (auto& [cell, idx] : interior) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return points[a] < points[b];
    });
    double left_pos = static_cast<double>(cell) * mesh;
    double left_val = field.value(cell);
    const double right_pos = static_cast<double>(cell + 1) * mesh;
    const double right_val = field.value(cell + 1);
    std::uint64_t k = 0;
    for (std::size_t i : idx) {
      const double p = points[i];
      if (p > left_pos) {
        const double span = right_pos - left_pos;
        const double w = (p - left_pos) / span;
        const double mean = left_val + w * (right_val - left_val);
        const double var = (p - left_pos) * (right_pos - p) / span;
        const double z = field.stream().normal_at(
            kFieldBridgeLane, mix64(zigzag(cell)) ^ k);
        left_val = mean + std::sqrt(std::max(var, 0.0)) * z;
        left_pos = p;
        ++k;
      }
      out[i] = left_val;
    }
  }
  return out;
}

}  // namespace ibmvar
