#include "ibmvar/variations.hpp"

#include <algorithm>
#include <numeric>

#include "ibmvar/errors.hpp"

namespace ibmvar {

namespace {

// Visits sum indices 1..max(counts) and reports the running value each time
// the index reaches one of the counts. Returns one value per count.
template <class Term>
std::vector<double> prefix_sums(const std::vector<std::int64_t>& counts,
                                std::int64_t first, Term&& term) {
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return counts[a] < counts[b];
  });
  std::vector<double> out(counts.size(), 0.0);
  CompensatedSum acc;
  std::int64_t k = first;
  for (std::size_t idx : order) {
    for (; k <= counts[idx]; ++k) acc.add(term(k));
    out[idx] = acc.value();
  }
  return out;
}

double sign_pow(int kappa) { return kappa % 2 == 0 ? 1.0 : -1.0; }

struct SiteCache {
  std::int64_t lo = 0;
  std::vector<double> x;
  std::vector<double> fx;

  double X(std::int64_t j) const { return x[static_cast<std::size_t>(j - lo)]; }
  double F(std::int64_t j) const { return fx[static_cast<std::size_t>(j - lo)]; }
};

SiteCache cache_sites(SpatialField& field, const WeightFunction& w,
                      std::int64_t lo, std::int64_t hi) {
  SiteCache c;
  c.lo = lo;
  c.x = field.window(lo, hi);
  c.fx.resize(c.x.size());
  for (std::size_t i = 0; i < c.x.size(); ++i) c.fx[i] = w.f(c.x[i]);
  return c;
}

void check_level(const VariationSpec& spec, const SpatialField& field) {
  if (!(spec.level == field.level())) {
    throw ArgumentError("spatial field level " +
                        std::to_string(field.level().n()) +
                        " does not match the variation level " +
                        std::to_string(spec.level.n()));
  }
}

std::pair<std::int64_t, std::int64_t> walk_range(const EmbeddedWalk& walk,
                                                 std::int64_t steps) {
  const auto begin = walk.positions.begin();
  const auto [mn, mx] = std::minmax_element(begin, begin + steps + 1);
  return {*mn, *mx};
}

std::int64_t literal_pair_count(const DyadicLevel& level, double t) {
  // k = 0..floor((2^{n/2} t - 1)/2)
  const std::int64_t m = snapped_floor(0.5 * (level.cells_per_unit() * t - 1.0));
  return m < 0 ? 0 : m + 1;
}

}  // namespace

void VariationSpec::validate() const {
  if (kappa < 2) throw ArgumentError("kappa must be >= 2");
  if (kappa > kMaxMomentOrder / 2) {
    throw ArgumentError("kappa above " + std::to_string(kMaxMomentOrder / 2));
  }
  if (times.empty()) throw ArgumentError("variation needs at least one time");
  for (double t : times) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ArgumentError("variation times must lie in [0, 1]");
    }
  }
  if (!std::is_sorted(times.begin(), times.end())) {
    throw ArgumentError("variation times must be sorted");
  }
  if (!weight.f) throw ArgumentError("variation weight is unset");
}

double VariationSpec::centering() const {
  return gaussian_moment(kappa) * std::exp2(-0.25 * kappa * level.n());
}

VariationSpec make_variation_spec(int kappa, int n, const std::string& weight,
                                  std::vector<double> times) {
  VariationSpec spec{kappa, DyadicLevel(n), registry_get(weight),
                     std::move(times), false};
  spec.validate();
  return spec;
}

std::vector<double> v_time_sum(const VariationSpec& spec,
                               const EmbeddedWalk& walk, SpatialField& field) {
  spec.validate();
  check_level(spec, field);
  std::vector<std::int64_t> counts;
  for (double t : spec.times) counts.push_back(spec.level.steps_until(t));
  const std::int64_t kmax = *std::max_element(counts.begin(), counts.end());
  if (walk.steps() < kmax) {
    throw ArgumentError("walk has " + std::to_string(walk.steps()) +
                        " steps, " + std::to_string(kmax) + " needed");
  }
  const auto [lo, hi] = walk_range(walk, kmax);
  const SiteCache s = cache_sites(field, spec.weight, lo, hi);
  const double c = spec.centering();
  const int kappa = spec.kappa;
  const auto& w = walk.positions;
  return prefix_sums(counts, 1, [&](std::int64_t k) {
    const std::int64_t a = w[static_cast<std::size_t>(k - 1)];
    const std::int64_t b = w[static_cast<std::size_t>(k)];
    return 0.5 * (s.F(a) + s.F(b)) * (ipow(s.X(b) - s.X(a), kappa) - c);
  });
}

double v_space_sum(const VariationSpec& spec, const CrossingTally& tally,
                   SpatialField& field) {
  check_level(spec, field);
  if (!(tally.level == spec.level)) throw ArgumentError("tally level mismatch");
  if (tally.up.empty() && tally.down.empty()) return 0.0;
  std::int64_t lo = tally.up.empty() ? tally.down.lo() : tally.up.lo();
  std::int64_t hi = tally.up.empty() ? tally.down.hi() : tally.up.hi();
  if (!tally.down.empty()) {
    lo = std::min(lo, tally.down.lo());
    hi = std::max(hi, tally.down.hi());
  }
  const SiteCache s = cache_sites(field, spec.weight, lo, hi + 1);
  const double c = spec.centering();
  const double sgn = sign_pow(spec.kappa);
  CompensatedSum acc;
  for (std::int64_t i = lo; i <= hi; ++i) {
    const double coef = static_cast<double>(tally.up.at(i)) +
                        sgn * static_cast<double>(tally.down.at(i));
    if (coef == 0.0) continue;
    acc.add(0.5 * (s.F(i) + s.F(i + 1)) *
            (ipow(s.X(i + 1) - s.X(i), spec.kappa) - c) * coef);
  }
  return acc.value();
}

std::vector<double> v_space_sum(const VariationSpec& spec,
                                const EmbeddedWalk& walk, SpatialField& field) {
  spec.validate();
  std::vector<double> out;
  for (double t : spec.times) {
    out.push_back(v_space_sum(spec, tally_crossings(walk, t), field));
  }
  return out;
}

std::vector<double> s_sum(const VariationSpec& spec, const EmbeddedWalk& walk,
                          SpatialField& field) {
  spec.validate();
  check_level(spec, field);
  std::vector<std::int64_t> counts;
  for (double t : spec.times) {
    counts.push_back(spec.literal_s_bound ? literal_pair_count(spec.level, t)
                                          : spec.level.pairs_until(t));
  }
  const std::int64_t pmax = *std::max_element(counts.begin(), counts.end());
  if (walk.steps() < 2 * pmax) {
    throw ArgumentError("walk has " + std::to_string(walk.steps()) +
                        " steps, " + std::to_string(2 * pmax) + " needed");
  }
  const auto [lo, hi] = walk_range(walk, 2 * pmax);
  const SiteCache s = cache_sites(field, spec.weight, lo, hi);
  const double sgn = -sign_pow(spec.kappa);  // (-1)^{kappa+1}
  const int kappa = spec.kappa;
  const auto& w = walk.positions;
  // Sum index p = k + 1 runs over 1..count.
  return prefix_sums(counts, 1, [&](std::int64_t p) {
    const std::int64_t k = p - 1;
    const std::int64_t a = w[static_cast<std::size_t>(2 * k)];
    const std::int64_t b = w[static_cast<std::size_t>(2 * k + 1)];
    const std::int64_t c = w[static_cast<std::size_t>(2 * k + 2)];
    return s.F(b) * (ipow(s.X(c) - s.X(b), kappa) + sgn * ipow(s.X(b) - s.X(a), kappa));
  });
}

double s_space_sum(const VariationSpec& spec, const DoubledTally& doubled,
                   SpatialField& field) {
  check_level(spec, field);
  if (!(doubled.level == spec.level)) throw ArgumentError("tally level mismatch");
  if (doubled.uu.empty() && doubled.dd.empty()) return 0.0;
  std::int64_t lo = doubled.uu.empty() ? doubled.dd.lo() : doubled.uu.lo();
  std::int64_t hi = doubled.uu.empty() ? doubled.dd.hi() : doubled.uu.hi();
  if (!doubled.dd.empty()) {
    lo = std::min(lo, doubled.dd.lo());
    hi = std::max(hi, doubled.dd.hi());
  }
  const SiteCache s = cache_sites(field, spec.weight, 2 * lo, 2 * hi + 2);
  const double sgn = -sign_pow(spec.kappa);
  CompensatedSum acc;
  for (std::int64_t j = lo; j <= hi; ++j) {
    const auto coef = static_cast<double>(doubled.uu.at(j) - doubled.dd.at(j));
    if (coef == 0.0) continue;
    const std::int64_t m = 2 * j + 1;
    acc.add(s.F(m) *
            (ipow(s.X(m + 1) - s.X(m), spec.kappa) +
             sgn * ipow(s.X(m) - s.X(m - 1), spec.kappa)) *
            coef);
  }
  return acc.value();
}

std::vector<double> s_space_sum(const VariationSpec& spec,
                                const EmbeddedWalk& walk, SpatialField& field) {
  spec.validate();
  std::vector<double> out;
  for (double t : spec.times) {
    out.push_back(s_space_sum(spec, tally_doubled(walk, t), field));
  }
  return out;
}

double j_one_sided(const VariationSpec& spec, SpatialField& field, double u) {
  check_level(spec, field);
  const std::int64_t m = spec.level.cells_until(std::abs(u));
  if (m <= 0) return 0.0;
  const std::int64_t side = u >= 0.0 ? 1 : -1;
  field.extend(std::min<std::int64_t>(0, side * m), std::max<std::int64_t>(0, side * m));
  CompensatedSum acc;
  double x_prev = field.at(0);
  double f_prev = spec.weight.f(x_prev);
  for (std::int64_t j = 1; j <= m; ++j) {
    const double x = field.at(side * j);
    const double fx = spec.weight.f(x);
    acc.add(0.5 * (f_prev + fx) * ipow(x - x_prev, spec.kappa));
    x_prev = x;
    f_prev = fx;
  }
  return spec.level.pow_quarter(spec.kappa - 1) * acc.value();
}

double j_tilde_one_sided(const VariationSpec& spec, SpatialField& field,
                         double u) {
  check_level(spec, field);
  const std::int64_t m = snapped_floor(0.5 * std::abs(u) * spec.level.cells_per_unit());
  if (m <= 0) return 0.0;
  const std::int64_t side = u >= 0.0 ? 1 : -1;
  field.extend(std::min<std::int64_t>(0, side * 2 * m),
               std::max<std::int64_t>(0, side * 2 * m));
  const double sgn = -sign_pow(spec.kappa);
  CompensatedSum acc;
  for (std::int64_t j = 0; j < m; ++j) {
    const double x0 = field.at(side * (2 * j));
    const double x1 = field.at(side * (2 * j + 1));
    const double x2 = field.at(side * (2 * j + 2));
    acc.add(spec.weight.f(x1) *
            (ipow(x2 - x1, spec.kappa) + sgn * ipow(x1 - x0, spec.kappa)));
  }
  return spec.level.pow_quarter(spec.kappa - 1) * acc.value();
}

GaussianSumSpec::GaussianSumSpec(double alpha_, double beta_, double gamma_,
                           Poly poly_, WeightFunction weight_,
                           DyadicLevel level_, std::vector<double> times_)
    : alpha(alpha_),
      beta(beta_),
      gamma(gamma_),
      poly(std::move(poly_)),
      weight(std::move(weight_)),
      level(level_),
      times(std::move(times_)) {
  const HermiteDecomposition d = decompose(poly);
  if (!d.centered_rank_ge2) {
    throw ArgumentError("polynomial " + poly.to_string() +
                        " has centered Hermite rank 1 (E[G P(G)] != 0)");
  }
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw ArgumentError("Gaussian functional times must be finite and >= 0");
    }
  }
  if (!weight.f) throw ArgumentError("weight is unset");
  poly_mean_ = d.mean;
  poly_variance_ = variance_of(d);
}

double GaussianSumSpec::limit_scale() const {
  return std::sqrt(gamma * gamma +
                   0.5 * (alpha * alpha + beta * beta) * poly_variance_);
}

std::vector<double> j_gaussian(const GaussianSumSpec& spec, SpatialField& field) {
  if (!(spec.level == field.level())) throw ArgumentError("field level mismatch");
  if (spec.times.empty()) return {};
  std::vector<std::int64_t> counts;
  for (double t : spec.times) counts.push_back(spec.level.cells_until(t));
  const std::int64_t kmax = *std::max_element(counts.begin(), counts.end());
  const SiteCache s = cache_sites(field, spec.weight, 0, kmax);
  const double up = spec.level.pow_quarter(1);
  std::vector<double> out = prefix_sums(counts, 1, [&](std::int64_t j) {
    const double g = up * (s.X(j) - s.X(j - 1));
    const double alt = j % 2 == 0 ? 1.0 : -1.0;
    return 0.5 * (s.F(j - 1) + s.F(j)) *
           (spec.phi(j) * (spec.poly(g) - spec.poly_mean()) + spec.gamma * alt * g);
  });
  for (double& v : out) v /= up;
  return out;
}

std::vector<double> m_blocks(const GaussianSumSpec& spec, int N,
                             SpatialField& field) {
  if (N < 1) throw ArgumentError("block count must be >= 1");
  if (!(spec.level == field.level())) throw ArgumentError("field level mismatch");
  const std::int64_t last = spec.level.cells_until(static_cast<double>(N));
  field.extend(0, last);
  const double up = spec.level.pow_quarter(1);
  std::vector<double> out(static_cast<std::size_t>(2 * N));
  for (int j = 1; j <= N; ++j) {
    const std::int64_t from = spec.level.cells_until(j - 1.0) + 1;
    const std::int64_t to = spec.level.cells_until(static_cast<double>(j));
    CompensatedSum centered, alternating;
    for (std::int64_t i = from; i <= to; ++i) {
      const double g = up * (field.at(i) - field.at(i - 1));
      centered.add(spec.phi(i) * (spec.poly(g) - spec.poly_mean()));
      alternating.add(i % 2 == 0 ? g : -g);
    }
    out[static_cast<std::size_t>(j - 1)] = centered.value() / up;
    out[static_cast<std::size_t>(j - 1 + N)] = alternating.value() / up;
  }
  return out;
}

std::vector<double> gaussian_preset(GaussianPreset preset, int kappa,
                                    const WeightFunction& weight,
                                    DyadicLevel level,
                                    const std::vector<double>& times,
                                    SpatialField& field) {
  if (kappa < 2) throw ArgumentError("kappa must be >= 2");
  if (!(level == field.level())) throw ArgumentError("field level mismatch");
  if (times.empty()) return {};
  const double scale = level.pow_quarter(kappa - 1);
  const bool pairs = preset == GaussianPreset::PairDifference ||
                     preset == GaussianPreset::PairSum;
  std::vector<std::int64_t> counts;
  for (double t : times) {
    if (!(t >= 0.0)) throw ArgumentError("times must be >= 0");
    if (pairs) {
      counts.push_back(std::max<std::int64_t>(
          0, snapped_floor(0.5 * (level.cells_per_unit() * t - 1.0))));
    } else {
      counts.push_back(level.cells_until(t));
    }
  }
  const std::int64_t kmax = *std::max_element(counts.begin(), counts.end());
  const SiteCache s = cache_sites(field, weight, 0, pairs ? 2 * kmax + 2 : kmax);

  std::vector<double> out;
  switch (preset) {
    case GaussianPreset::TrapezoidPower: {
      const double up = level.pow_quarter(1);
      const double mu = gaussian_moment(kappa);
      out = prefix_sums(counts, 1, [&](std::int64_t j) {
        const double g = up * (s.X(j) - s.X(j - 1));
        return 0.5 * (s.F(j - 1) + s.F(j)) * (ipow(g, kappa) - mu);
      });
      for (double& v : out) v /= up;
      break;
    }
    case GaussianPreset::AlternatingPower:
      out = prefix_sums(counts, 1, [&](std::int64_t j) {
        const double alt = j % 2 == 0 ? 1.0 : -1.0;
        return 0.5 * (s.F(j - 1) + s.F(j)) * alt * ipow(s.X(j) - s.X(j - 1), kappa);
      });
      for (double& v : out) v *= scale;
      break;
    case GaussianPreset::PairDifference:
    case GaussianPreset::PairSum: {
      const double sgn = preset == GaussianPreset::PairSum ? 1.0 : -1.0;
      out = prefix_sums(counts, 1, [&](std::int64_t j) {
        const std::int64_t m = 2 * j + 1;
        return s.F(m) * (ipow(s.X(m + 1) - s.X(m), kappa) +
                         sgn * ipow(s.X(m) - s.X(m - 1), kappa));
      });
      for (double& v : out) v *= scale;
      break;
    }
  }
  return out;
}

}  // namespace ibmvar
