#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ibmvar::stats {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const;  // of the mean
  std::size_t n = 0;
};

Moments moments(std::span<const double> x);
double covariance(std::span<const double> x, std::span<const double> y);

// Standard error of the unbiased sample variance, from the fourth central
// moment: sqrt((m4 - (n-3)/(n-1) s^4) / n).
double variance_std_error(std::span<const double> x);

// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
double kolmogorov_survival(double lambda);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic p-value and the
// Stephens small-sample correction (sqrt(ne) + 0.12 + 0.11/sqrt(ne)).
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample KS against Uniform(0, 1).
TestResult ks_uniform(std::span<const double> u);

// Energy-distance two-sample test on rows of dimension `dim`
// (samples stored row-major). Statistic nm/(n+m) * E; p-value from
// `permutations` random relabellings seeded by `seed`.
TestResult energy_test(std::span<const double> a, std::span<const double> b,
                       std::size_t dim, int permutations, std::uint64_t seed);

// Jarque-Bera normality test (chi-square with 2 degrees of freedom).
TestResult jarque_bera(std::span<const double> x);

}  // namespace ibmvar::stats
