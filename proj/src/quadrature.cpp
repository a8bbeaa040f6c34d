#include "divgauge/quadrature.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <sstream>

#include "divgauge/errors.hpp"

namespace divgauge {

namespace {

// Kronrod abscissae; odd indices are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gk15(const Integrand& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  const double value = kronrod * half;
  const double error = std::abs((kronrod - gauss) * half);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite integrand on [" << a << ", " << b << "]";
    throw ConvergenceError(msg.str());
  }
  return {a, b, value, error};
}

}  // namespace

QuadratureResult integrate(const Integrand& f, double a, double b, double abs_tol, double rel_tol,
                           int max_intervals) {
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b);
  double total = first.value;
  double total_error = first.error;
  heap.push(first);
  int evaluations = 15;
  while (total_error > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (static_cast<int>(heap.size()) >= max_intervals) {
      std::ostringstream msg;
      msg << "adaptive quadrature did not reach tolerance " << abs_tol << " (estimate " << total_error << ")";
      throw ConvergenceError(msg.str());
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left = gk15(f, worst.a, mid);
    const Segment right = gk15(f, mid, worst.b);
    evaluations += 30;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the cancellation accumulated by incremental updates.
  QuadratureResult result;
  result.intervals = static_cast<int>(heap.size());
  result.evaluations = evaluations;
  while (!heap.empty()) {
    result.value += heap.top().value;
    result.abs_error += heap.top().error;
    heap.pop();
  }
  return result;
}

QuadratureResult integrate_real_line(const Integrand& f, double center, double scale, double abs_tol,
                                     double rel_tol, int max_intervals) {
  const Integrand mapped = [&](double t) {
    const double x = center + scale * std::atanh(t);
    const double jac = scale / ((1.0 - t) * (1.0 + t));
    if (!std::isfinite(x) || !std::isfinite(jac)) return 0.0;
    const double v = f(x);
    return v == 0.0 ? 0.0 : v * jac;
  };
  return integrate(mapped, -1.0, 1.0, abs_tol, rel_tol, max_intervals);
}

NodeRule composite_kronrod(double a, double b, int panels) {
  NodeRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * 15);
  rule.weights.reserve(static_cast<std::size_t>(panels) * 15);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double center = lo + 0.5 * width;
    const double half = 0.5 * width;
    for (int j = 0; j < 7; ++j) {
      rule.nodes.push_back(center - half * kXgk[j]);
      rule.weights.push_back(half * kWgk[j]);
      rule.nodes.push_back(center + half * kXgk[j]);
      rule.weights.push_back(half * kWgk[j]);
    }
    rule.nodes.push_back(center);
    rule.weights.push_back(half * kWgk[7]);
  }
  return rule;
}

}  // namespace divgauge
