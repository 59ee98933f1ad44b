#pragma once

#include <cmath>
#include <vector>

#include "ibmvar/stats.hpp"

namespace testing_support {

// |estimate - target| <= k standard errors
inline bool within_se(double estimate, double target, double se, double k = 3.0) {
  return std::abs(estimate - target) <= k * se;
}

struct MeanCheck {
  double mean;
  double se;
};

inline MeanCheck mean_of(const std::vector<double>& x) {
  const auto m = ibmvar::stats::moments(x);
  return {m.mean, m.std_error()};
}

// Mean of squares with its standard error; used for E[V^2]-type oracles.
inline MeanCheck mean_square(const std::vector<double>& x) {
  std::vector<double> sq;
  sq.reserve(x.size());
  for (double v : x) sq.push_back(v * v);
  return mean_of(sq);
}

}  // namespace testing_support
