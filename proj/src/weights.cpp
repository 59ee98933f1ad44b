#include "ibmvar/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ibmvar/errors.hpp"

namespace ibmvar {

namespace {

std::map<std::string, WeightFunction> build_registry() {
  std::map<std::string, WeightFunction> r;
  r["one"] = {"one",
              [](double) { return 1.0; },
              [](double) { return 0.0; },
              [](double) { return 0.0; },
              [](double x) { return x; },
              true, 0.0, 0.0};
  r["identity"] = {"identity",
                   [](double x) { return x; },
                   [](double) { return 1.0; },
                   [](double) { return 0.0; },
                   [](double x) { return 0.5 * x * x; },
                   true, 1.0, 0.0};
  r["cos"] = {"cos",
              [](double x) { return std::cos(x); },
              [](double x) { return -std::sin(x); },
              [](double x) { return -std::cos(x); },
              [](double x) { return std::sin(x); },
              true, 1.0, 1.0};
  r["sin"] = {"sin",
              [](double x) { return std::sin(x); },
              [](double x) { return std::cos(x); },
              [](double x) { return -std::sin(x); },
              [](double x) { return 1.0 - std::cos(x); },
              true, 1.0, 1.0};
  // f'' = -2x/(1+x^2)^2 peaks at x = 1/sqrt(3) with value 3 sqrt(3)/8.
  r["atan"] = {"atan",
               [](double x) { return std::atan(x); },
               [](double x) { return 1.0 / (1.0 + x * x); },
               [](double x) {
                 const double d = 1.0 + x * x;
                 return -2.0 * x / (d * d);
               },
               [](double x) { return x * std::atan(x) - 0.5 * std::log1p(x * x); },
               true, 1.0, 0.65};
  r["cauchy"] = {"cauchy",
                 [](double x) { return 1.0 / (1.0 + x * x); },
                 [](double x) {
                   const double d = 1.0 + x * x;
                   return -2.0 * x / (d * d);
                 },
                 [](double x) {
                   const double d = 1.0 + x * x;
                   return (6.0 * x * x - 2.0) / (d * d * d);
                 },
                 [](double x) { return std::atan(x); },
                 true, 0.65, 2.0};
  return r;
}

const std::map<std::string, WeightFunction>& registry() {
  static const auto r = build_registry();
  return r;
}

}  // namespace

const WeightFunction& registry_get(const std::string& name) {
  const auto& r = registry();
  auto it = r.find(name);
  if (it == r.end()) {
    std::string known;
    for (const auto& [k, v] : r) known += (known.empty() ? "" : ", ") + k;
    throw ArgumentError("unknown weight '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> registry_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

WeightCheck check_weight(const WeightFunction& w) {
  WeightCheck c;
  constexpr int kDerivGrid = 20001;
  for (int i = 0; i < kDerivGrid; ++i) {
    const double x = -50.0 + 100.0 * i / (kDerivGrid - 1);
    c.max_f1 = std::max(c.max_f1, std::abs(w.f1(x)));
    c.max_f2 = std::max(c.max_f2, std::abs(w.f2(x)));
  }
  if (w.bounded_derivs) {
    c.derivs_bounded = c.max_f1 <= w.f1_bound && c.max_f2 <= w.f2_bound;
  }
  constexpr double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const double x = -50.0 + 100.0 * i / 99.0;
    const double fd = (w.F(x + h) - w.F(x - h)) / (2.0 * h);
    c.max_fd_error = std::max(c.max_fd_error, std::abs(fd - w.f(x)));
  }
  c.antiderivative_ok = c.max_fd_error <= 1e-6 && w.F(0.0) == 0.0;
  return c;
}

}  // namespace ibmvar
