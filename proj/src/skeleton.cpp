#include "ibmvar/skeleton.hpp"

#include <cmath>
#include <string>

#include "ibmvar/errors.hpp"

namespace ibmvar {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ArgumentError("time must lie in [0, 1], got " + std::to_string(t));
  }
}

void require_steps(const EmbeddedWalk& walk, std::int64_t need) {
  if (walk.steps() < need) {
    throw ArgumentError("walk has " + std::to_string(walk.steps()) +
                        " steps, " + std::to_string(need) + " needed");
  }
}

std::int64_t parity_floor_div2(std::int64_t w) {
  if (w % 2 != 0) {
    throw InvariantViolation("odd walk position " + std::to_string(w) +
                             " at an even step index");
  }
  return w / 2;
}

}  // namespace

EmbeddedWalk simulate_walk(const RngStream& stream, DyadicLevel level,
                           double t) {
  check_time(t);
  const std::int64_t k = level.steps_until(t);
  EmbeddedWalk walk;
  walk.level = level;
  walk.positions.resize(static_cast<std::size_t>(k) + 1);
  walk.positions[0] = 0;
  CounterEngine engine = stream.engine(0);
  std::uint64_t bits = 0;
  int left = 0;
  std::int64_t w = 0;
  for (std::int64_t i = 1; i <= k; ++i) {
    if (left == 0) {
      bits = engine();
      left = 64;
    }
    w += (bits & 1U) ? 1 : -1;
    bits >>= 1;
    --left;
    walk.positions[static_cast<std::size_t>(i)] = w;
  }
  return walk;
}

namespace {

constexpr std::uint64_t kCrossingLane = 13;
constexpr std::uint64_t kCrossingUniformLane = 14;
// Pieces up to this bridge variance (grid units) cannot reach two levels.
constexpr double kShortPieceVar = 1.0 / 16.0;
constexpr int kMaxSplitDepth = 40;
// Probability below which a bridge excursion to an untouched level is ignored.
constexpr double kHiddenCrossingTol = 1e-8;

// Walks the crossings of one linear piece of the scaled path (grid step 1).
class CrossingScanner {
 public:
  CrossingScanner(std::int64_t need, double mesh, const RngStream* bridge)
      : need_(need), mesh_(mesh), bridge_(bridge) {}

  std::int64_t found() const noexcept { return found_; }
  bool done() const noexcept { return found_ >= need_; }
  std::vector<std::int64_t>& positions() noexcept { return positions_; }
  std::vector<double>& hits() noexcept { return hits_; }

  // Segment i of the fine path, from scaled value a to b.
  void segment(std::size_t i, double a, double b) {
    if (bridge_ == nullptr) {
      linear(static_cast<double>(i), 1.0, a, b);
    } else {
      split(i, 1, static_cast<double>(i), 1.0, a, b, 0);
    }
  }

 private:
  // Straight piece starting at step position `s0`, lasting `len` steps.
  void linear(double s0, double len, double a, double b) {
    if (b > a) {
      while (!done() && static_cast<double>(c_ + 1) <= b) {
        ++c_;
        record(s0 + len * (static_cast<double>(c_) - a) / (b - a));
      }
    } else if (b < a) {
      while (!done() && static_cast<double>(c_ - 1) >= b) {
        --c_;
        record(s0 + len * (a - static_cast<double>(c_)) / (a - b));
      }
    }
  }

  // Resolves crossings the straight piece would miss. Returning to the
  // current level is not an event, so the hidden events are excursions past
  // the outermost level the piece reaches on either side. A long piece is
  // halved at a bridge draw. A short piece with no visible crossing gets at
  // most one hidden crossing, decided with the exact probability that a
  // Brownian bridge from a to b reaches the level.
  void split(std::size_t i, std::uint64_t node, double s0, double len, double a,
             double b, int depth) {
    if (done()) return;
    const double var = len * mesh_;  // bridge variance in grid units
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double c = static_cast<double>(c_);
    const double top = std::max(std::floor(hi), c) + 1.0;
    const double bottom = std::min(std::ceil(lo), c) - 1.0;
    const double interior = std::ceil(hi) - std::floor(lo) - 1.0;
    const double p_top = std::exp(-2.0 * (top - a) * (top - b) / var);
    const double p_bottom = std::exp(-2.0 * (a - bottom) * (b - bottom) / var);
    const bool short_piece = var <= kShortPieceVar && interior <= 1.0;
    if (depth >= kMaxSplitDepth ||
        (short_piece && p_top < kHiddenCrossingTol && p_bottom < kHiddenCrossingTol)) {
      linear(s0, len, a, b);
      return;
    }
    const bool visible = b >= c + 1.0 || b <= c - 1.0;
    if (short_piece && !visible && std::min(p_top, p_bottom) < kHiddenCrossingTol) {
      CounterEngine e(bridge_->engine(kCrossingUniformLane).key(), mix64(i) + node);
      if (uniform01(e) < std::max(p_top, p_bottom)) {
        c_ = p_top > p_bottom ? c_ + 1 : c_ - 1;
        record(s0 + 0.5 * len);
      }
      return;
    }
    const double z = bridge_->normal_at(kCrossingLane, mix64(i) + node);
    const double mid = 0.5 * (a + b) + std::sqrt(0.25 * var) * z;
    split(i, 2 * node, s0, 0.5 * len, a, mid, depth + 1);
    split(i, 2 * node + 1, s0 + 0.5 * len, 0.5 * len, mid, b, depth + 1);
  }

  void record(double step_position) {
    positions_.push_back(c_);
    hits_.push_back(step_position);
    ++found_;
  }

  std::int64_t need_;
  double mesh_;
  const RngStream* bridge_;
  std::int64_t c_ = 0;
  std::int64_t found_ = 0;
  std::vector<std::int64_t> positions_{0};
  std::vector<double> hits_{0.0};
};

}  // namespace

EmbeddedWalk extract_walk(const FinePath& path, DyadicLevel level, double t,
                          const RngStream* bridge) {
  check_time(t);
  if (path.values.empty() || path.values.front() != 0.0) {
    throw ArgumentError("fine path must start at 0");
  }
  const std::int64_t need = level.steps_until(t);
  const double scale = level.cells_per_unit();
  // Variance of one fine step in grid units.
  CrossingScanner scan(need, path.mesh * scale * scale, bridge);
  double ua = 0.0;
  for (std::size_t i = 0; i + 1 < path.values.size() && !scan.done(); ++i) {
    const double ub = path.values[i + 1] * scale;
    scan.segment(i, ua, ub);
    ua = ub;
  }
  if (!scan.done()) throw IncompleteSkeleton(scan.found(), need);
  EmbeddedWalk walk;
  walk.level = level;
  walk.positions = std::move(scan.positions());
  std::vector<double> hits = std::move(scan.hits());
  for (double& h : hits) h *= path.mesh;
  walk.hit_times = std::move(hits);
  return walk;
}

CoupledWalk sample_coupled_walk(const RngStream& stream, DyadicLevel level,
                                double t, int oversample) {
  check_time(t);
  if (oversample < 16 || oversample % 2 != 0) {
    throw ArgumentError("coupled walk needs an even oversampling factor >= 16");
  }
  const double coarse_mesh = level.time_mesh() / (oversample / 2);
  // The k-th crossing time has mean k 2^{-n} and sd sqrt(2k/3) 2^{-n}.
  const double sd = std::sqrt(2.0 * t / 3.0) * level.spatial_mesh();
  double margin = 8.0 * sd + 64.0 * level.time_mesh();
  for (int attempt = 0;; ++attempt) {
    // Sequential draws: a longer horizon extends the same path.
    FinePath coarse = sample_fine_path(stream, t + margin, coarse_mesh);
    FinePath fine = refine_bridge(coarse, 2, stream);
    try {
      EmbeddedWalk walk = extract_walk(fine, level, t, &stream);
      return {std::move(fine), std::move(walk)};
    } catch (const IncompleteSkeleton&) {
      if (attempt >= 6) throw;
      margin *= 2.0;
    }
  }
}

CrossingTally tally_crossings(const EmbeddedWalk& walk, double t) {
  check_time(t);
  CrossingTally tally;
  tally.level = walk.level;
  tally.steps_used = walk.level.steps_until(t);
  require_steps(walk, tally.steps_used);
  const auto& w = walk.positions;
  for (std::int64_t k = 0; k < tally.steps_used; ++k) {
    const std::int64_t a = w[static_cast<std::size_t>(k)];
    const std::int64_t b = w[static_cast<std::size_t>(k + 1)];
    if (b == a + 1) {
      ++tally.up.ref(a);
    } else if (b == a - 1) {
      ++tally.down.ref(b);
    } else {
      throw InvariantViolation("walk step of size " + std::to_string(b - a));
    }
  }
  return tally;
}

IndexedLine<double> skeletal_local_time(const CrossingTally& tally) {
  IndexedLine<double> out;
  if (tally.up.empty() && tally.down.empty()) return out;
  const double eps = tally.level.spatial_mesh();
  std::int64_t lo = 0, hi = 0;
  bool any = false;
  for (const auto* line : {&tally.up, &tally.down}) {
    if (line->empty()) continue;
    lo = any ? std::min(lo, line->lo()) : line->lo();
    hi = any ? std::max(hi, line->hi()) : line->hi();
    any = true;
  }
  std::vector<double> v(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t j = lo; j <= hi; ++j) {
    v[static_cast<std::size_t>(j - lo)] =
        eps * static_cast<double>(tally.up.at(j) + tally.down.at(j));
  }
  return IndexedLine<double>(lo, std::move(v));
}

DoubledTally tally_doubled(const EmbeddedWalk& walk, double t) {
  check_time(t);
  DoubledTally tally;
  tally.level = walk.level;
  tally.pairs_used = walk.level.pairs_until(t);
  require_steps(walk, 2 * tally.pairs_used);
  const auto& w = walk.positions;
  for (std::int64_t k = 0; k < tally.pairs_used; ++k) {
    const std::int64_t a = w[static_cast<std::size_t>(2 * k)];
    const std::int64_t b = w[static_cast<std::size_t>(2 * k + 1)];
    const std::int64_t c = w[static_cast<std::size_t>(2 * k + 2)];
    const std::int64_t half = parity_floor_div2(a);
    if (b == a + 1) {
      // middle site a+1 = 2j+1
      if (c == a + 2) ++tally.uu.ref(half);
      else ++tally.ud.ref(half);
    } else {
      // middle site a-1 = 2j+1
      if (c == a - 2) ++tally.dd.ref(half - 1);
      else ++tally.du.ref(half - 1);
    }
  }
  return tally;
}

TerminalIndices terminal_indices(const EmbeddedWalk& walk, DyadicLevel level,
                                 double t) {
  check_time(t);
  const std::int64_t k = level.steps_until(t);
  const std::int64_t p = level.pairs_until(t);
  require_steps(walk, std::max(k, 2 * p));
  TerminalIndices out;
  out.j_star = walk.positions[static_cast<std::size_t>(k)];
  out.j_tilde = parity_floor_div2(walk.positions[static_cast<std::size_t>(2 * p)]);
  out.y_n_t = static_cast<double>(out.j_star) * level.spatial_mesh();
  return out;
}

}  // namespace ibmvar
