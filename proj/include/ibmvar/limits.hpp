#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ibmvar/gaussian_paths.hpp"
#include "ibmvar/rng.hpp"
#include "ibmvar/variations.hpp"
#include "ibmvar/weights.hpp"

namespace ibmvar {

// The four independent Brownian sources of one replicate.
struct LimitStreams {
  RngStream x;
  RngStream y;
  RngStream b;
  RngStream b2;

  LimitStreams(std::uint64_t master_seed, std::uint64_t stream_id)
      : x(master_seed, stream_id, Substream::X),
        y(master_seed, stream_id, Substream::Y),
        b(master_seed, stream_id, Substream::B),
        b2(master_seed, stream_id, Substream::B2) {}
};

enum class LimitKind { BMRS, WBMRS, MixedOdd, WienerAtYt, GaussianJ, IBM };
std::string_view to_string(LimitKind kind);

struct LimitSample {
  std::vector<double> times;
  std::vector<double> values;
  LimitKind kind = LimitKind::IBM;
  std::uint64_t master_seed = 0;  // the (X, Y, B) draw that produced it
  std::uint64_t stream_id = 0;
  std::vector<double> x_sites;    // X evaluated jointly with the functional
  std::vector<double> x_values;
};

inline constexpr int kDefaultLimitLevel = 16;

// Every sampler builds Y, X and B by bridge refinement from coarse grids, so
// draws at levels n_lim and n_lim + 2 from the same streams are coupled.
struct LimitOptions {
  int level = kDefaultLimitLevel;  // resolution n_lim: spatial mesh 2^{-n_lim/2}
  std::vector<double> x_sites;
};

// int_R L_t^x(Y) dB_x, with L from the occupation density of a Y path at
// time mesh 2^{-n_lim} on spatial bins of width 2^{-n_lim/2}.
LimitSample sample_bmrs(const LimitStreams& streams,
                        const std::vector<double>& times,
                        const LimitOptions& options = {});

// sqrt(mu_{2k} - mu_k^2) int_R f(X_z) L_t^z(Y) dB_z.
LimitSample sample_wbmrs(const WeightFunction& weight, int kappa,
                         const LimitStreams& streams,
                         const std::vector<double>& times,
                         const LimitOptions& options = {});

// mu_{k+1} F(X_{Y_t}) + sqrt(mu_{2k} - mu_{k+1}^2) int_0^{Y_t} f(X_z) dB_z, k odd.
LimitSample sample_mixed_odd(const WeightFunction& weight, int kappa,
                             const LimitStreams& streams,
                             const std::vector<double>& times,
                             const LimitOptions& options = {});

// sqrt(mu_{2k} - mu_k^2) int_0^{Y_t} f(X_z) dB_z, k even.
LimitSample sample_wiener_at_yt(const WeightFunction& weight, int kappa,
                                const LimitStreams& streams,
                                const std::vector<double>& times,
                                const LimitOptions& options = {});

// scale * int_0^t f(X_s) dB_s + stratonovich * F(X_t), t >= 0.
LimitSample sample_gaussian_j_limit(double scale, double stratonovich,
                                    const WeightFunction& weight,
                                    const LimitStreams& streams,
                                    const std::vector<double>& times,
                                    const LimitOptions& options = {});
LimitSample sample_gaussian_j_limit(const GaussianSumSpec& spec,
                                    const LimitStreams& streams,
                                    const LimitOptions& options = {});

// Z_t = X(Y_t).
LimitSample sample_ibm(const LimitStreams& streams,
                       const std::vector<double>& times,
                       const LimitOptions& options = {});

// Oriented Wiener integral int_0^u f(X_z) dB_z (= -int_u^0 for u < 0) on the
// grid of the two fields: each cell contributes f(X) at its end nearer the
// origin times the B increment away from the origin.
double oriented_wiener_integral(const WeightFunction& weight, SpatialField& x,
                                SpatialField& b, double u, double b_at_u);

// Y at the given times, drawn from exact Gaussian increments.
std::vector<double> sample_y_at(const RngStream& y, const std::vector<double>& times);

}  // namespace ibmvar
