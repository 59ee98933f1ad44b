#pragma once

#include <map>
#include <string>
#include <vector>

namespace ibmvar {

inline constexpr int kMaxMomentOrder = 40;
inline constexpr int kMaxHermiteDegree = 40;
// Up to this degree the monomial-to-Hermite change of basis uses integers.
inline constexpr int kExactBasisDegree = 20;

// Real polynomial; coeffs[k] multiplies x^k. Trailing zeros are trimmed so
// the leading coefficient is nonzero (the zero polynomial has no coeffs).
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> coeffs);

  // x^k - c.
  static Poly monomial_minus(int k, double c);

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  // -1 for the zero polynomial.
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  double coeff(int k) const {
    return k >= 0 && k <= degree() ? coeffs_[static_cast<std::size_t>(k)] : 0.0;
  }
  double operator()(double x) const;
  std::string to_string() const;

  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator*(double s, const Poly& p);

 private:
  std::vector<double> coeffs_;
};

// P(x) = mean + sum_m b[m] H_m(x) with probabilists' Hermite H_m.
struct HermiteDecomposition {
  double mean = 0.0;
  std::map<int, double> b;  // m >= 1, nonzero entries only
  bool centered_rank_ge2 = true;

  double coefficient(int m) const {
    auto it = b.find(m);
    return it == b.end() ? 0.0 : it->second;
  }
};

// E[G^q] for G standard Gaussian: 0 for odd q, (q-1)!! for even q.
double gaussian_moment(int q);

// Probabilists' Hermite polynomial He_m.
Poly hermite_poly(int m);

HermiteDecomposition decompose(const Poly& p);

// Var(P(G)) = sum_{m>=1} b_m^2 m!.
double variance_of(const Poly& p);
double variance_of(const HermiteDecomposition& d);

// mean + sum b_m H_m, back in the monomial basis.
Poly reconstruct(const HermiteDecomposition& d);

}  // namespace ibmvar
