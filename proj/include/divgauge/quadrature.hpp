#pragma once

#include <functional>
#include <vector>

namespace divgauge {

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  int intervals = 0;
};

using Integrand = std::function<double(double)>;

// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]: the interval with the
// largest error estimate is bisected until the summed estimate drops below
// max(abs_tol, rel_tol * |I|). Throws ConvergenceError when max_intervals is
// reached first or a non-finite value appears.
QuadratureResult integrate(const Integrand& f, double a, double b, double abs_tol = 1e-9,
                           double rel_tol = 0.0, int max_intervals = 4000);

// Integral over the real line through x = center + scale * atanh(t).
QuadratureResult integrate_real_line(const Integrand& f, double center = 0.0, double scale = 1.0,
                                     double abs_tol = 1e-9, double rel_tol = 0.0, int max_intervals = 4000);

// Fixed composite 15-point Kronrod node set on [a, b]; used to represent
// "exact" expectations of smooth integrands as weighted sums.
struct NodeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

NodeRule composite_kronrod(double a, double b, int panels);

}  // namespace divgauge
