#include "ibmvar/localtime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibmvar/errors.hpp"

namespace ibmvar {

namespace {

class OccupationAccumulator {
 public:
  explicit OccupationAccumulator(double eps) : eps_(eps) {}

  std::int64_t bin(double y) const {
    return static_cast<std::int64_t>(std::floor(y / eps_ + 0.5));
  }

  // Linear segment from y0 to y1 lasting dt.
  void add_segment(double y0, double y1, double dt) {
    if (dt <= 0.0) return;
    if (y0 == y1) {
      acc_.ref(bin(y0)) += dt;
      return;
    }
    const double lo = std::min(y0, y1);
    const double hi = std::max(y0, y1);
    const double rate = dt / (hi - lo);
    const std::int64_t b0 = bin(lo);
    const std::int64_t b1 = bin(hi);
    if (b0 == b1) {
      acc_.ref(b0) += dt;
      return;
    }
    double placed = 0.0;
    for (std::int64_t j = b0; j <= b1; ++j) {
      const double left = std::max(lo, (static_cast<double>(j) - 0.5) * eps_);
      const double right = std::min(hi, (static_cast<double>(j) + 0.5) * eps_);
      if (right <= left) continue;
      double share = (right - left) * rate;
      if (j == b1) share = dt - placed;  // keeps the total exact
      acc_.ref(j) += share;
      placed += share;
    }
  }

  LocalTimeProfile snapshot(DyadicLevel level, double t) const {
    LocalTimeProfile p;
    p.level = level;
    p.t = t;
    p.bandwidth = eps_;
    std::vector<double> v = acc_.values();
    for (double& x : v) x /= eps_;
    p.values = IndexedLine<double>(acc_.lo(), std::move(v));
    return p;
  }

 private:
  double eps_;
  IndexedLine<double> acc_;
};

}  // namespace

double LocalTimeProfile::total() const {
  double s = 0.0;
  for (double v : values.values()) s += v;
  return s * bandwidth;
}

std::vector<LocalTimeProfile> occupation_profiles(const FinePath& path,
                                                  DyadicLevel level,
                                                  const std::vector<double>& times) {
  if (path.values.empty()) throw ArgumentError("empty path");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  for (double t : times) {
    if (!(t >= 0.0)) throw ArgumentError("occupation time must be >= 0");
    if (t > path.horizon() * (1.0 + 1e-12)) {
      throw ArgumentError("path horizon " + std::to_string(path.horizon()) +
                          " is shorter than t = " + std::to_string(t));
    }
  }
  OccupationAccumulator acc(level.spatial_mesh());
  std::vector<LocalTimeProfile> out(times.size());
  std::size_t seg = 0;    // current segment [seg, seg+1]
  double pos = 0.0;       // time already consumed
  double y_pos = path.values[0];
  for (std::size_t idx : order) {
    const double t = std::min(times[idx], path.horizon());
    while (pos < t) {
      const double seg_end = path.mesh * static_cast<double>(seg + 1);
      const double stop = std::min(seg_end, t);
      double y_stop;
      if (stop >= seg_end) {
        y_stop = path.values[seg + 1];
      } else {
        const double frac = (stop - path.mesh * static_cast<double>(seg)) / path.mesh;
        y_stop = path.values[seg] + frac * (path.values[seg + 1] - path.values[seg]);
      }
      acc.add_segment(y_pos, y_stop, stop - pos);
      pos = stop;
      y_pos = y_stop;
      if (stop >= seg_end) ++seg;
      if (seg + 1 >= path.values.size()) break;
    }
    out[idx] = acc.snapshot(level, times[idx]);
  }
  return out;
}

LocalTimeProfile occupation_profile(const FinePath& path, DyadicLevel level,
                                    double t) {
  return occupation_profiles(path, level, {t}).front();
}

SkeletalGap skeletal_vs_true(const LocalTimeProfile& profile,
                             const CrossingTally& tally) {
  if (!(profile.level == tally.level)) {
    throw ArgumentError("local-time profile and tally use different levels");
  }
  const IndexedLine<double> skel = skeletal_local_time(tally);
  SkeletalGap gap;
  if (skel.empty() && profile.values.empty()) return gap;
  std::int64_t lo = skel.empty() ? profile.values.lo() : skel.lo();
  std::int64_t hi = skel.empty() ? profile.values.hi() : skel.hi();
  if (!profile.values.empty()) {
    lo = std::min(lo, profile.values.lo());
    hi = std::max(hi, profile.values.hi());
  }
  for (std::int64_t j = lo; j <= hi; ++j) {
    const double v = profile.values.at(j);
    const double d = std::abs(skel.at(j) - v);
    gap.sup_gap = std::max(gap.sup_gap, d);
    gap.weighted_gap = std::max(gap.weighted_gap, d / std::max(std::sqrt(v), 1e-3));
  }
  return gap;
}

}  // namespace ibmvar
