#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ibmvar/dyadic.hpp"
#include "ibmvar/gaussian_paths.hpp"
#include "ibmvar/hermite.hpp"
#include "ibmvar/skeleton.hpp"
#include "ibmvar/weights.hpp"

namespace ibmvar {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double ipow(double x, int k) noexcept {
  double r = 1.0;
  for (; k > 0; k >>= 1, x *= x) {
    if (k & 1) r *= x;
  }
  return r;
}

struct VariationSpec {
  int kappa = 2;
  DyadicLevel level{1};
  WeightFunction weight;
  std::vector<double> times;
  // S sums over k = 0..floor((2^{n/2} t - 1)/2) instead of the
  // floor(2^{n-1} t) pair-steps.
  bool literal_s_bound = false;

  void validate() const;
  // mu_kappa 2^{-kappa n/4}: the conditional mean of a skeletal increment
  // raised to the power kappa.
  double centering() const;
};

VariationSpec make_variation_spec(int kappa, int n, const std::string& weight,
                                  std::vector<double> times);

// Weighted power variation V_n(f, t) summed along the walk.
std::vector<double> v_time_sum(const VariationSpec& spec,
                               const EmbeddedWalk& walk, SpatialField& field);

// The same quantity summed over grid cells with crossing counts:
// cell i = [i, i+1] contributes
// 1/2 (f(X_i) + f(X_{i+1})) ((X_{i+1} - X_i)^kappa - c) (U_i + (-1)^kappa D_i).
double v_space_sum(const VariationSpec& spec, const CrossingTally& tally,
                   SpatialField& field);
std::vector<double> v_space_sum(const VariationSpec& spec,
                                const EmbeddedWalk& walk, SpatialField& field);

// Signed variation S_n(f, t) over pair-steps.
std::vector<double> s_sum(const VariationSpec& spec, const EmbeddedWalk& walk,
                          SpatialField& field);

// S_n from doubled crossing counts: sum over j of
// f(X_{2j+1}) [(X_{2j+2} - X_{2j+1})^kappa + (-1)^{kappa+1} (X_{2j+1} - X_{2j})^kappa] (UU_j - DD_j).
double s_space_sum(const VariationSpec& spec, const DoubledTally& doubled,
                   SpatialField& field);
std::vector<double> s_space_sum(const VariationSpec& spec,
                                const EmbeddedWalk& walk, SpatialField& field);

// J_n(f, u): 2^{(kappa-1)n/4} (1/2) sum_{j=1}^{floor(2^{n/2}|u|)} of trapezoid
// weights times kappa-th powers of increments, along X on the side of u
// (the reflected path s -> X_{-s} when u < 0).
double j_one_sided(const VariationSpec& spec, SpatialField& field, double u);

// Pair version: 2^{(kappa-1)n/4} sum_{j=0}^{m-1} f(X_{2j+1})
// [(X_{2j+2}-X_{2j+1})^kappa + (-1)^{kappa+1}(X_{2j+1}-X_{2j})^kappa] on the
// side of u, m = floor(2^{n/2}|u|/2).
double j_tilde_one_sided(const VariationSpec& spec, SpatialField& field,
                         double u);

// Functionals of the rescaled increments g_j = 2^{n/4}(X_{j eps} - X_{(j-1) eps}),
// eps = 2^{-n/2}, on the positive half of a spatial field.
struct GaussianSumSpec {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  Poly poly;
  WeightFunction weight;
  DyadicLevel level{1};
  std::vector<double> times;

  GaussianSumSpec(double alpha, double beta, double gamma, Poly poly,
               WeightFunction weight, DyadicLevel level,
               std::vector<double> times);

  double phi(std::int64_t i) const noexcept { return i % 2 == 0 ? alpha : beta; }
  // sqrt(gamma^2 + (alpha^2 + beta^2)/2 Var(P(G))).
  double limit_scale() const;
  double poly_mean() const noexcept { return poly_mean_; }

 private:
  double poly_mean_ = 0.0;
  double poly_variance_ = 0.0;
};

// 2^{-n/4} (1/2) sum_{j=1}^{floor(2^{n/2} t)} (f(X_{j-1}) + f(X_j))
// [phi(j) (P(g_j) - E P(G)) + gamma (-1)^j g_j].
std::vector<double> j_gaussian(const GaussianSumSpec& spec, SpatialField& field);

// Block sums M_1..M_N (phi-weighted centered P) followed by
// M_{N+1}..M_{2N} (alternating increments).
std::vector<double> m_blocks(const GaussianSumSpec& spec, int N,
                             SpatialField& field);

enum class GaussianPreset { TrapezoidPower, AlternatingPower, PairDifference, PairSum };

// Named special cases of the Gaussian functional, evaluated literally:
//  TrapezoidPower   2^{-n/4} 1/2 sum (f+f)(g_j^kappa - mu_kappa)
//  AlternatingPower 2^{(kappa-1)n/4} 1/2 sum (f+f)(-1)^j (dX_j)^kappa
//  PairDifference   2^{(kappa-1)n/4} sum_{j=1}^{floor((2^{n/2}t-1)/2)}
//                   f(X_{2j+1})[(dX_{2j+2})^kappa - (dX_{2j+1})^kappa]
//  PairSum          same with + between the two powers
std::vector<double> gaussian_preset(GaussianPreset preset, int kappa,
                                    const WeightFunction& weight,
                                    DyadicLevel level,
                                    const std::vector<double>& times,
                                    SpatialField& field);

}  // namespace ibmvar
