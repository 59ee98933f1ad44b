#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ibmvar/dyadic.hpp"
#include "ibmvar/gaussian_paths.hpp"
#include "ibmvar/indexed_line.hpp"
#include "ibmvar/rng.hpp"

namespace ibmvar {

// Embedded simple random walk: positions[k] = 2^{n/2} Y(T_k) where T_k is
// the k-th time Y reaches a grid level other than the previous one.
struct EmbeddedWalk {
  DyadicLevel level{1};
  std::vector<std::int64_t> positions{0};
  std::optional<std::vector<double>> hit_times;  // coupled mode only

  std::int64_t steps() const noexcept {
    return static_cast<std::int64_t>(positions.size()) - 1;
  }
};

// Marginal mode: floor(2^n t) fair +-1 steps.
EmbeddedWalk simulate_walk(const RngStream& stream, DyadicLevel level, double t);

// Coupled mode: the first floor(2^n t) grid crossings of the path. Without
// `bridge` the path is linearly interpolated. With it, each fine step is
// treated as a Brownian bridge and halved (draws keyed on the stream) until
// no untouched level is within reach, so crossings between samples are not
// lost. Throws IncompleteSkeleton if the path runs out first.
EmbeddedWalk extract_walk(const FinePath& path, DyadicLevel level, double t,
                          const RngStream* bridge = nullptr);

struct CoupledWalk {
  FinePath path;
  EmbeddedWalk walk;
};

// Samples a Y path at mesh 2^{-n}/oversample (one bridge-refinement pass from
// twice that mesh) long enough to contain floor(2^n t) crossings, and
// extracts the walk from it. Requires oversample >= 16 and even.
CoupledWalk sample_coupled_walk(const RngStream& stream, DyadicLevel level,
                                double t, int oversample = 16);

// up[j]: steps j -> j+1, down[j]: steps j+1 -> j, among the first
// steps_used steps.
struct CrossingTally {
  DyadicLevel level{1};
  IndexedLine<std::int64_t> up;
  IndexedLine<std::int64_t> down;
  std::int64_t steps_used = 0;
};

CrossingTally tally_crossings(const EmbeddedWalk& walk, double t);

// Skeletal local time 2^{-n/2} (U_j + D_j).
IndexedLine<double> skeletal_local_time(const CrossingTally& tally);

// Pair-steps (w_{2k}, w_{2k+1}, w_{2k+2}) classified by pattern. Entry j of
// each line counts pairs whose middle position is the odd site 2j+1.
struct DoubledTally {
  DyadicLevel level{1};
  IndexedLine<std::int64_t> uu;
  IndexedLine<std::int64_t> ud;
  IndexedLine<std::int64_t> du;
  IndexedLine<std::int64_t> dd;
  std::int64_t pairs_used = 0;
};

DoubledTally tally_doubled(const EmbeddedWalk& walk, double t);

struct TerminalIndices {
  std::int64_t j_star = 0;   // w_{floor(2^n t)}
  std::int64_t j_tilde = 0;  // w_{2 floor(2^{n-1} t)} / 2
  double y_n_t = 0.0;        // j_star * 2^{-n/2}
};

TerminalIndices terminal_indices(const EmbeddedWalk& walk, DyadicLevel level,
                                 double t);

}  // namespace ibmvar
