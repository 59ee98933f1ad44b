#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ibmvar {

// A C^2 weight f with analytic f', f'' and antiderivative F (F(0) = 0).
struct WeightFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f1;
  std::function<double(double)> f2;
  std::function<double(double)> F;
  bool bounded_derivs = true;
  double f1_bound = 0.0;  // declared sup|f'|
  double f2_bound = 0.0;  // declared sup|f''|
};

const WeightFunction& registry_get(const std::string& name);
std::vector<std::string> registry_names();

struct WeightCheck {
  bool derivs_bounded = true;
  bool antiderivative_ok = true;
  double max_f1 = 0.0;
  double max_f2 = 0.0;
  double max_fd_error = 0.0;
};

// Samples [-50, 50]: sup|f'|, sup|f''| against the declared bounds and
// |(F(x+h) - F(x-h))/2h - f(x)| <= 1e-6 with h = 1e-5 on 100 points.
WeightCheck check_weight(const WeightFunction& w);

}  // namespace ibmvar
