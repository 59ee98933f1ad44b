#include "ibmvar/hermite.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

#include "ibmvar/errors.hpp"

namespace ibmvar {

namespace {

double factorial(int m) {
  double r = 1.0;
  for (int i = 2; i <= m; ++i) r *= i;
  return r;
}

// Entries c[k][m] of x^k = sum_m c[k][m] He_m, via x He_m = He_{m+1} + m He_{m-1}.
template <class T>
std::vector<std::vector<T>> monomial_to_hermite(int degree) {
  std::vector<std::vector<T>> c(static_cast<std::size_t>(degree + 1),
                                std::vector<T>(static_cast<std::size_t>(degree + 2), T{0}));
  c[0][0] = T{1};
  for (int k = 0; k < degree; ++k) {
    auto& next = c[static_cast<std::size_t>(k + 1)];
    const auto& cur = c[static_cast<std::size_t>(k)];
    for (int m = 0; m <= k; ++m) {
      const T v = cur[static_cast<std::size_t>(m)];
      if (v == T{0}) continue;
      next[static_cast<std::size_t>(m + 1)] += v;
      if (m >= 1) next[static_cast<std::size_t>(m - 1)] += static_cast<T>(m) * v;
    }
  }
  return c;
}

}  // namespace

Poly::Poly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

Poly Poly::monomial_minus(int k, double c) {
  if (k < 0) throw ArgumentError("negative monomial degree");
  std::vector<double> v(static_cast<std::size_t>(k + 1), 0.0);
  v[static_cast<std::size_t>(k)] += 1.0;
  v[0] -= c;
  return Poly(std::move(v));
}

double Poly::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::string Poly::to_string() const {
  if (coeffs_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int k = degree(); k >= 0; --k) {
    const double c = coeffs_[static_cast<std::size_t>(k)];
    if (c == 0.0) continue;
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    const double a = std::abs(c);
    if (k == 0 || a != 1.0) os << a;
    if (k >= 1) os << "x";
    if (k >= 2) os << "^" << k;
    first = false;
  }
  return os.str();
}

Poly operator+(const Poly& a, const Poly& b) {
  std::vector<double> v(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) v[i] += a.coeffs_[i];
  for (std::size_t i = 0; i < b.coeffs_.size(); ++i) v[i] += b.coeffs_[i];
  return Poly(std::move(v));
}

Poly operator*(double s, const Poly& p) {
  std::vector<double> v = p.coeffs_;
  for (double& c : v) c *= s;
  return Poly(std::move(v));
}

double gaussian_moment(int q) {
  if (q < 0 || q > kMaxMomentOrder) {
    throw ArgumentError("gaussian_moment: order must lie in [0, " +
                        std::to_string(kMaxMomentOrder) + "], got " +
                        std::to_string(q));
  }
  if (q % 2 != 0) return 0.0;
  // q! / (2^{q/2} (q/2)!) = (q-1)!!
  unsigned __int128 r = 1;
  for (int i = q - 1; i > 1; i -= 2) r *= static_cast<unsigned __int128>(i);
  return static_cast<double>(r);
}

Poly hermite_poly(int m) {
  if (m < 0 || m > kMaxHermiteDegree) {
    throw ArgumentError("hermite_poly: degree must lie in [0, " +
                        std::to_string(kMaxHermiteDegree) + "]");
  }
  std::vector<double> prev{1.0};
  if (m == 0) return Poly(prev);
  std::vector<double> cur{0.0, 1.0};
  for (int k = 1; k < m; ++k) {
    // He_{k+1} = x He_k - k He_{k-1}
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= k * prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return Poly(cur);
}

HermiteDecomposition decompose(const Poly& p) {
  HermiteDecomposition d;
  if (p.is_zero()) return d;
  const int deg = p.degree();
  if (deg > kMaxHermiteDegree) {
    throw ArgumentError("decompose: degree above " +
                        std::to_string(kMaxHermiteDegree));
  }
  std::vector<double> h(static_cast<std::size_t>(deg + 1), 0.0);
  double scale = 0.0;
  if (deg <= kExactBasisDegree) {
    const auto c = monomial_to_hermite<std::int64_t>(deg);
    for (int k = 0; k <= deg; ++k) {
      for (int m = 0; m <= k; ++m) {
        const auto e = c[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
        if (e == 0) continue;
        const double term = p.coeff(k) * static_cast<double>(e);
        h[static_cast<std::size_t>(m)] += term;
        scale += std::abs(term);
      }
    }
  } else {
    const auto c = monomial_to_hermite<double>(deg);
    for (int k = 0; k <= deg; ++k) {
      for (int m = 0; m <= k; ++m) {
        const double term = p.coeff(k) * c[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
        h[static_cast<std::size_t>(m)] += term;
        scale += std::abs(term);
      }
    }
  }
  d.mean = h[0];
  for (int m = 1; m <= deg; ++m) {
    if (h[static_cast<std::size_t>(m)] != 0.0) d.b[m] = h[static_cast<std::size_t>(m)];
  }
  d.centered_rank_ge2 = std::abs(d.coefficient(1)) <= 1e-12 * std::max(1.0, scale);
  return d;
}

double variance_of(const HermiteDecomposition& d) {
  double v = 0.0;
  for (const auto& [m, bm] : d.b) v += bm * bm * factorial(m);
  return v;
}

double variance_of(const Poly& p) { return variance_of(decompose(p)); }

Poly reconstruct(const HermiteDecomposition& d) {
  Poly out(std::vector<double>{d.mean});
  for (const auto& [m, bm] : d.b) out = out + bm * hermite_poly(m);
  return out;
}

}  // namespace ibmvar
