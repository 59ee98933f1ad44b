#pragma once

#include <vector>

#include "ibmvar/dyadic.hpp"
#include "ibmvar/gaussian_paths.hpp"
#include "ibmvar/indexed_line.hpp"
#include "ibmvar/skeleton.hpp"

namespace ibmvar {

// Occupation density of a path on the grid j * eps, eps = 2^{-n/2}:
// values[j] = time spent in [(j - 1/2) eps, (j + 1/2) eps) up to t, over eps.
struct LocalTimeProfile {
  DyadicLevel level{1};
  double t = 0.0;
  double bandwidth = 0.0;
  IndexedLine<double> values;

  // sum_j values[j] * eps; equals t up to rounding.
  double total() const;
};

LocalTimeProfile occupation_profile(const FinePath& path, DyadicLevel level,
                                    double t);

// Profiles at several times from one pass over the path.
std::vector<LocalTimeProfile> occupation_profiles(const FinePath& path,
                                                  DyadicLevel level,
                                                  const std::vector<double>& times);

struct SkeletalGap {
  double sup_gap = 0.0;
  double weighted_gap = 0.0;  // max |gap| / max(sqrt(L), 1e-3)
};

SkeletalGap skeletal_vs_true(const LocalTimeProfile& profile,
                             const CrossingTally& tally);

}  // namespace ibmvar
