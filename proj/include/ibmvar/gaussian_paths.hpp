#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ibmvar/dyadic.hpp"
#include "ibmvar/rng.hpp"

namespace ibmvar {

inline constexpr std::size_t kDefaultMaxPathSteps = std::size_t{1} << 27;

// One-sided Brownian path on a uniform grid: values[i] = Y(i * mesh).
struct FinePath {
  double mesh = 0.0;
  std::vector<double> values;

  double horizon() const noexcept {
    return values.empty() ? 0.0 : mesh * static_cast<double>(values.size() - 1);
  }
  std::size_t steps() const noexcept {
    return values.empty() ? 0 : values.size() - 1;
  }
  // Piecewise-linear interpolant at time s in [0, horizon].
  double at_time(double s) const;
};

FinePath sample_fine_path(const RngStream& stream, double horizon, double mesh,
                          std::size_t max_steps = kDefaultMaxPathSteps);

// Splits every step into `factor` sub-steps; inserted points are Brownian
// bridge draws, shared points are copied unchanged.
FinePath refine_bridge(const FinePath& path, int factor,
                       const RngStream& stream, std::uint64_t lane = 1);

// Path at mesh 2^{-exponent} covering [0, horizon], built from a mesh-1/16
// base by repeated halving with one bridge lane per depth. Paths with the
// same stream and different exponents agree at their common times.
FinePath sample_nested_path(const RngStream& stream, double horizon,
                            int exponent);

// Two-sided Brownian motion sampled at j * 2^{-n/2}, grown lazily in either
// direction. Existing values never change when the window widens: each side
// draws its increments in order from its own lane of the stream.
class SpatialField {
 public:
  SpatialField(const RngStream& stream, DyadicLevel level);

  // Field with prescribed values on [lo, lo + values.size() - 1]; the window
  // must contain 0 with value 0. Such a field cannot be extended.
  static SpatialField from_values(DyadicLevel level, std::int64_t lo,
                                  const std::vector<double>& values);
  bool is_fixed() const noexcept { return fixed_; }

  // Fixed field on [lo, hi] at `level`, built from a coarse base (level 2,
  // or 1 for odd n) by inserting bridge midpoints one level pair at a time.
  // Fields at levels n and n + 2 from the same stream agree on the coarser
  // grid, which couples simulations across resolutions.
  static SpatialField nested(const RngStream& stream, DyadicLevel level,
                             std::int64_t lo, std::int64_t hi);

  const DyadicLevel& level() const noexcept { return level_; }
  const RngStream& stream() const noexcept { return stream_; }
  double mesh() const noexcept { return mesh_; }
  std::int64_t lo() const noexcept {
    return -static_cast<std::int64_t>(negative_.size()) + 1;
  }
  std::int64_t hi() const noexcept {
    return static_cast<std::int64_t>(positive_.size()) - 1;
  }

  void extend(std::int64_t lo, std::int64_t hi);

  // Value at grid index j; j must already be covered.
  double at(std::int64_t j) const {
    return j >= 0 ? positive_[static_cast<std::size_t>(j)]
                  : negative_[static_cast<std::size_t>(-j)];
  }
  // Value at grid index j, extending the window when needed.
  double value(std::int64_t j) {
    extend(std::min<std::int64_t>(j, 0), std::max<std::int64_t>(j, 0));
    return at(j);
  }

  // Contiguous copy of the values on [lo, hi] (extending first).
  std::vector<double> window(std::int64_t lo, std::int64_t hi);

 private:
  RngStream stream_;
  DyadicLevel level_;
  double mesh_;
  double step_sd_;
  CounterEngine positive_engine_;
  CounterEngine negative_engine_;
  std::vector<double> positive_;  // positive_[k] = X(k * mesh), k >= 0
  std::vector<double> negative_;  // negative_[k] = X(-k * mesh), k >= 0
  bool fixed_ = false;
};

SpatialField sample_spatial_field(const RngStream& stream, DyadicLevel level,
                                  std::int64_t lo, std::int64_t hi);

// Values of the field at arbitrary real points. Points between grid nodes are
// filled in by sequential Brownian-bridge draws keyed on the cell, so the
// result is a deterministic function of (field stream, set of points).
std::vector<double> sample_field_at(SpatialField& field,
                                    std::span<const double> points);

}  // namespace ibmvar
