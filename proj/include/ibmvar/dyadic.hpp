#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ibmvar/errors.hpp"

namespace ibmvar {

// floor(x), except that values within 1e-9 (relative) of an integer snap to
// it. Grid counts such as floor(2^{n/2} u) are computed from products that
// are integers in exact arithmetic but can land one ulp below in floating
// point when n is odd.
inline std::int64_t snapped_floor(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::int64_t>(r);
  }
  return static_cast<std::int64_t>(std::floor(x));
}

// Resolution level n: spatial mesh 2^{-n/2}, temporal mesh 2^{-n}.
class DyadicLevel {
 public:
  explicit DyadicLevel(int n) : n_(n) {
    if (n < 1 || n > 60) {
      throw ArgumentError("dyadic level must lie in [1, 60], got " +
                          std::to_string(n));
    }
  }

  int n() const noexcept { return n_; }
  double spatial_mesh() const noexcept { return std::exp2(-0.5 * n_); }
  double time_mesh() const noexcept { return std::ldexp(1.0, -n_); }
  // 2^{n/2}: number of spatial cells per unit length.
  double cells_per_unit() const noexcept { return std::exp2(0.5 * n_); }
  // 2^{q n / 4}.
  double pow_quarter(int q) const noexcept { return std::exp2(0.25 * q * n_); }

  // Walk steps up to time t: floor(2^n t).
  std::int64_t steps_until(double t) const {
    return snapped_floor(std::ldexp(t, n_));
  }
  // Pair-steps up to time t: floor(2^{n-1} t).
  std::int64_t pairs_until(double t) const {
    return snapped_floor(std::ldexp(t, n_ - 1));
  }
  // Spatial cells covered by [0, u]: floor(2^{n/2} u), u >= 0.
  std::int64_t cells_until(double u) const {
    return snapped_floor(u * cells_per_unit());
  }

  friend bool operator==(const DyadicLevel&, const DyadicLevel&) = default;

 private:
  int n_;
};

}  // namespace ibmvar
