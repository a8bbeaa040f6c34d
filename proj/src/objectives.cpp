#include "divgauge/objectives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>

#include "divgauge/errors.hpp"
#include "divgauge/stats.hpp"

namespace divgauge {

namespace {

constexpr double kDegenerateVariance = 1e-12;

inline double weight(const std::vector<double>& w, std::size_t i, std::size_t n) {
  return w.empty() ? 1.0 / static_cast<double>(n) : w[i];
}

ObjectiveValue sized(const BatchEval& batch) {
  ObjectiveValue out;
  out.grad_phi_q.assign(batch.n_q(), 0.0);
  out.grad_phi_p.assign(batch.n_p(), 0.0);
  return out;
}

ObjectiveValue minus_infinity(const BatchEval& batch) {
  ObjectiveValue out = sized(batch);
  out.value = -kInf;
  return out;
}

// Moments of v under the tilted measure t_i ~ w_i exp(scale v_i), with the
// partial derivatives of the tilted mean and variance w.r.t. v_j.
struct Tilted {
  double log_z = 0.0;
  double mean = 0.0;
  double second = 0.0;
  double var = 0.0;
  std::vector<double> t;

  double d_mean(std::size_t j, double v, double scale) const { return t[j] * (1.0 + scale * (v - mean)); }
  double d_var(std::size_t j, double v, double scale) const {
    const double d_second = t[j] * (2.0 * v + scale * (v * v - second));
    return d_second - 2.0 * mean * d_mean(j, v, scale);
  }
};

Tilted tilt(const std::vector<double>& v, const std::vector<double>& w, double scale) {
  Tilted out;
  out.t.resize(v.size());
  out.log_z = log_mean_exp(v, w, scale, out.t);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.mean += out.t[i] * v[i];
    out.second += out.t[i] * v[i] * v[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out.var += out.t[i] * (v[i] - out.mean) * (v[i] - out.mean);
  return out;
}

ObjectiveValue lt_core(const DivergenceFamily& family, const BatchEval& batch, double eta, double nu,
                       bool throw_on_domain) {
  ObjectiveValue out = sized(batch);
  const std::size_t nq = batch.n_q();
  const std::size_t np = batch.n_p();
  double mean_q = 0.0;
  for (std::size_t i = 0; i < nq; ++i) {
    const double w = weight(batch.weights_q, i, nq);
    mean_q += w * batch.phi_q[i];
    out.grad_phi_q[i] = eta * w;
  }
  double e_fstar = 0.0;
  double e_d1 = 0.0;
  double e_d1_phi = 0.0;
  for (std::size_t j = 0; j < np; ++j) {
    const double y = eta * batch.phi_p[j] - nu;
    const double fs = family.f_star(y);
    if (std::isinf(fs)) {
      if (throw_on_domain && family.is_alpha_like()) {
        std::ostringstream msg;
        msg << "test-function value " << batch.phi_p[j] << " outside the domain of f* for " << family.name();
        throw DomainError(msg.str());
      }
      return minus_infinity(batch);
    }
    const double w = weight(batch.weights_p, j, np);
    const double d1 = family.f_star_d1(y);
    e_fstar += w * fs;
    e_d1 += w * d1;
    e_d1_phi += w * d1 * batch.phi_p[j];
    out.grad_phi_p[j] = -w * d1 * eta;
  }
  out.value = eta * mean_q - nu - e_fstar;
  if (std::isnan(out.value) || std::isinf(out.value)) return minus_infinity(batch);
  out.grad_transform.eta = mean_q - e_d1_phi;
  out.grad_transform.nu = -1.0 + e_d1;
  return out;
}

void check_alpha(double alpha) { DivergenceFamily::alpha(alpha); }

// Shared body of the scale and scale+power alpha objectives.
ObjectiveValue alpha_power_core(double alpha, double beta, const BatchEval& batch) {
  check_alpha(alpha);
  const bool below_one = alpha < 1.0;
  const auto check_sign = [&](const std::vector<double>& phi) {
    for (double v : phi) {
      if (below_one ? !(v > 0.0) : !(v >= 0.0)) {
        std::ostringstream msg;
        msg << "alpha-scale objective needs " << (below_one ? "positive" : "non-negative")
            << " test-function values, got " << v;
        throw DomainError(msg.str());
      }
    }
  };
  check_sign(batch.phi_q);
  check_sign(batch.phi_p);

  const double q_exp = alpha / (alpha - 1.0);
  std::vector<double> uq(batch.n_q());
  std::vector<double> up(batch.n_p());
  std::transform(batch.phi_q.begin(), batch.phi_q.end(), uq.begin(), [](double v) { return std::log(v); });
  std::transform(batch.phi_p.begin(), batch.phi_p.end(), up.begin(), [](double v) { return std::log(v); });
  std::vector<double> ta(uq.size());
  std::vector<double> tb(up.size());
  const double log_a = log_mean_exp(uq, batch.weights_q, beta, ta);
  const double log_b = log_mean_exp(up, batch.weights_p, beta * q_exp, tb);

  ObjectiveValue out = sized(batch);
  const double c = 1.0 / (alpha * (alpha - 1.0));
  if (std::isinf(log_b)) {
    // Only reachable for alpha > 1 with phi = 0 on the whole P-batch: 0/0 is
    // read as 1, c/0 as an unbounded ratio that cannot serve as a bound.
    if (std::isinf(log_a)) {
      out.value = 0.0;
      return out;
    }
    return minus_infinity(batch);
  }
  if (std::isinf(log_a)) {
    out.value = -c;
    return out;
  }
  const double log_g = alpha * log_a + (1.0 - alpha) * log_b;
  const double g = std::exp(log_g);
  out.value = c * (g - 1.0);
  const double scale = c * g;
  const double exp_a = std::exp(log_a);
  double mean_u_a = 0.0;
  double mean_u_b = 0.0;
  for (std::size_t i = 0; i < uq.size(); ++i) {
    const double v = batch.phi_q[i];
    double dlog;
    if (v > 0.0) {
      dlog = alpha * beta * ta[i] / v;
      mean_u_a += ta[i] * uq[i];
    } else {
      dlog = beta == 1.0 ? alpha * weight(batch.weights_q, i, uq.size()) / exp_a : 0.0;
    }
    out.grad_phi_q[i] = scale * dlog;
  }
  for (std::size_t j = 0; j < up.size(); ++j) {
    const double v = batch.phi_p[j];
    if (v > 0.0) {
      out.grad_phi_p[j] = scale * (-alpha * beta * tb[j] / v);
      mean_u_b += tb[j] * up[j];
    }
  }
  out.grad_transform.beta = scale * alpha * (mean_u_a - mean_u_b);
  return out;
}

double golden_max(const std::function<double(double)>& f, double a, double b, int iterations = 120) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < iterations; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

ScalarMax grid_then_golden(const std::function<double(double)>& f, double lo, double hi, int grid) {
  int best = 0;
  double best_value = -kInf;
  ScalarMax identity{1.0, -kInf};
  if (lo <= 1.0 && 1.0 <= hi) identity.value = f(1.0);
  for (int i = 0; i <= grid; ++i) {
    const double x = lo + (hi - lo) * i / grid;
    const double v = f(x);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(0, best - 1) / grid;
  const double b = lo + (hi - lo) * std::min(grid, best + 1) / grid;
  const double x = golden_max(f, a, b);
  ScalarMax out{x, f(x)};
  if (best_value > out.value) out = {lo + (hi - lo) * best / grid, best_value};
  if (identity.value > out.value) out = identity;
  return out;
}

}  // namespace

void BatchEval::validate() const {
  if (n_q() < 2 || n_p() < 2) throw DomainError("batches need at least two entries");
  if (!weights_q.empty() && weights_q.size() != n_q()) throw DomainError("Q weights do not match batch");
  if (!weights_p.empty() && weights_p.size() != n_p()) throw DomainError("P weights do not match batch");
  for (double v : phi_q) {
    if (std::isnan(v)) throw DomainError("NaN in Q-batch test-function values");
  }
  for (double v : phi_p) {
    if (std::isnan(v)) throw DomainError("NaN in P-batch test-function values");
  }
}

ObjectiveValue lt_objective(const DivergenceFamily& family, const BatchEval& batch) {
  return lt_core(family, batch, 1.0, 0.0, true);
}

ObjectiveValue lt_transformed_objective(const DivergenceFamily& family, const BatchEval& batch, double eta,
                                        double nu) {
  return lt_core(family, batch, eta, nu, true);
}

ObjectiveValue dv_objective(const BatchEval& batch) { return improved_dv_objective(batch, 1.0); }

ObjectiveValue improved_dv_objective(const BatchEval& batch, double eta) {
  ObjectiveValue out = sized(batch);
  const std::size_t nq = batch.n_q();
  double mean_q = 0.0;
  for (std::size_t i = 0; i < nq; ++i) {
    const double w = weight(batch.weights_q, i, nq);
    mean_q += w * batch.phi_q[i];
    out.grad_phi_q[i] = eta * w;
  }
  std::vector<double> t(batch.n_p());
  const double log_z = log_mean_exp(batch.phi_p, batch.weights_p, eta, t);
  double tilted_mean = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    out.grad_phi_p[j] = -eta * t[j];
    tilted_mean += t[j] * batch.phi_p[j];
  }
  out.value = eta * mean_q - log_z;
  out.grad_transform.eta = mean_q - tilted_mean;
  return out;
}

ObjectiveValue approx_improved_dv(const BatchEval& batch, bool floor_at_dv) {
  const Tilted tp = tilt(batch.phi_p, batch.weights_p, 1.0);
  const std::size_t nq = batch.n_q();
  double mean_q = 0.0;
  for (std::size_t i = 0; i < nq; ++i) mean_q += weight(batch.weights_q, i, nq) * batch.phi_q[i];
  if (tp.var < kDegenerateVariance) return dv_objective(batch);

  const double num = mean_q - tp.mean;
  const double step = num / tp.var;
  ObjectiveValue out = improved_dv_objective(batch, 1.0 + step);
  out.inner_step = step;
  const double d_eta = out.grad_transform.eta;
  for (std::size_t i = 0; i < nq; ++i) out.grad_phi_q[i] += d_eta * weight(batch.weights_q, i, nq) / tp.var;
  for (std::size_t j = 0; j < batch.n_p(); ++j) {
    const double v = batch.phi_p[j];
    const double d_step = (-tp.d_mean(j, v, 1.0) * tp.var - num * tp.d_var(j, v, 1.0)) / (tp.var * tp.var);
    out.grad_phi_p[j] += d_eta * d_step;
  }
  out.grad_transform = {};
  if (floor_at_dv) {
    ObjectiveValue dv = dv_objective(batch);
    if (dv.value > out.value) return dv;
  }
  return out;
}

ObjectiveValue alpha_scale_objective(double alpha, const BatchEval& batch) {
  ObjectiveValue out = alpha_power_core(alpha, 1.0, batch);
  out.grad_transform.beta = 0.0;
  return out;
}

ObjectiveValue alpha_scale_power_objective(double alpha, double beta, const BatchEval& batch) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("scale+power objective needs alpha in (0,1)");
  return alpha_power_core(alpha, beta, batch);
}

ObjectiveValue renyi_objective(double alpha, const BatchEval& batch) {
  check_alpha(alpha);
  ObjectiveValue out = sized(batch);
  std::vector<double> tq(batch.n_q());
  std::vector<double> tp(batch.n_p());
  const double lq = log_mean_exp(batch.phi_q, batch.weights_q, alpha - 1.0, tq);
  const double lp = log_mean_exp(batch.phi_p, batch.weights_p, alpha, tp);
  out.value = lq / (alpha - 1.0) - lp / alpha;
  for (std::size_t i = 0; i < tq.size(); ++i) out.grad_phi_q[i] = tq[i];
  for (std::size_t j = 0; j < tp.size(); ++j) out.grad_phi_p[j] = -tp[j];
  return out;
}

ObjectiveValue approx_power_renyi(double alpha, const BatchEval& batch) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("approximate power Renyi objective needs alpha in (0,1)");
  const double sq = alpha - 1.0;
  const double sp = alpha;
  const Tilted tq = tilt(batch.phi_q, batch.weights_q, sq);
  const Tilted tp = tilt(batch.phi_p, batch.weights_p, sp);
  const double num = tq.mean - tp.mean;
  const double den = (1.0 - alpha) * tq.var + alpha * tp.var;
  if (den < kDegenerateVariance) return renyi_objective(alpha, batch);

  const double step = num / den;
  const double beta = 1.0 + step;
  BatchEval scaled = batch;
  for (double& v : scaled.phi_q) v *= beta;
  for (double& v : scaled.phi_p) v *= beta;
  const ObjectiveValue inner = renyi_objective(alpha, scaled);
  double d_beta = 0.0;
  for (std::size_t i = 0; i < batch.n_q(); ++i) d_beta += batch.phi_q[i] * inner.grad_phi_q[i];
  for (std::size_t j = 0; j < batch.n_p(); ++j) d_beta += batch.phi_p[j] * inner.grad_phi_p[j];

  ObjectiveValue out = sized(batch);
  out.value = inner.value;
  out.inner_step = step;
  for (std::size_t i = 0; i < batch.n_q(); ++i) {
    const double v = batch.phi_q[i];
    const double d_step = (tq.d_mean(i, v, sq) * den - num * (1.0 - alpha) * tq.d_var(i, v, sq)) / (den * den);
    out.grad_phi_q[i] = beta * inner.grad_phi_q[i] + d_beta * d_step;
  }
  for (std::size_t j = 0; j < batch.n_p(); ++j) {
    const double v = batch.phi_p[j];
    const double d_step = (-tp.d_mean(j, v, sp) * den - num * alpha * tp.d_var(j, v, sp)) / (den * den);
    out.grad_phi_p[j] = beta * inner.grad_phi_p[j] + d_beta * d_step;
  }
  return out;
}

ObjectiveValue chi2_hcr_objective(const BatchEval& batch) {
  ObjectiveValue out = sized(batch);
  const double mq = weighted_mean(batch.phi_q, batch.weights_q);
  const double mp = weighted_mean(batch.phi_p, batch.weights_p);
  const double var = weighted_variance(batch.phi_p, batch.weights_p);
  if (var < kDegenerateVariance) return out;
  const double diff = mq - mp;
  out.value = diff * diff / var;
  for (std::size_t i = 0; i < batch.n_q(); ++i) {
    out.grad_phi_q[i] = 2.0 * diff * weight(batch.weights_q, i, batch.n_q()) / var;
  }
  for (std::size_t j = 0; j < batch.n_p(); ++j) {
    const double w = weight(batch.weights_p, j, batch.n_p());
    out.grad_phi_p[j] = -2.0 * diff * w / var - diff * diff / (var * var) * 2.0 * w * (batch.phi_p[j] - mp);
  }
  return out;
}

ObjectiveValue chi2_shift_objective(const BatchEval& batch) {
  ObjectiveValue out = sized(batch);
  const double mq = weighted_mean(batch.phi_q, batch.weights_q);
  const double mp = weighted_mean(batch.phi_p, batch.weights_p);
  const double var = weighted_variance(batch.phi_p, batch.weights_p);
  out.value = mq - mp - 0.25 * var;
  for (std::size_t i = 0; i < batch.n_q(); ++i) out.grad_phi_q[i] = weight(batch.weights_q, i, batch.n_q());
  for (std::size_t j = 0; j < batch.n_p(); ++j) {
    const double w = weight(batch.weights_p, j, batch.n_p());
    out.grad_phi_p[j] = -w - 0.5 * w * (batch.phi_p[j] - mp);
  }
  return out;
}

ScalarMax sup_improved_dv(const BatchEval& batch, double lo, double hi, int grid) {
  return grid_then_golden([&](double eta) { return improved_dv_objective(batch, eta).value; }, lo, hi, grid);
}

ScalarMax sup_alpha_scale_power(double alpha, const BatchEval& batch, double lo, double hi, int grid) {
  return grid_then_golden([&](double beta) { return alpha_scale_power_objective(alpha, beta, batch).value; }, lo,
                          hi, grid);
}

TransformMax sup_lt_transform(const DivergenceFamily& family, const BatchEval& batch, TransformSet set, double eta0,
                              double nu0) {
  const bool use_eta = set == TransformSet::kScale || set == TransformSet::kAffine;
  const bool use_nu = set == TransformSet::kShift || set == TransformSet::kAffine;
  TransformMax cur{eta0, nu0, lt_core(family, batch, eta0, nu0, false).value};
  if (!std::isfinite(cur.value)) throw ConvergenceError("transform search started outside the domain of f*");
  if (set == TransformSet::kIdentity) return cur;

  const std::size_t np = batch.n_p();
  for (int iter = 0; iter < 200; ++iter) {
    // Gradient and Hessian of H(eta, nu).
    double mean_q = 0.0;
    for (std::size_t i = 0; i < batch.n_q(); ++i) mean_q += weight(batch.weights_q, i, batch.n_q()) * batch.phi_q[i];
    double e_d1 = 0.0, e_d1_phi = 0.0, e_d2 = 0.0, e_d2_phi = 0.0, e_d2_phi2 = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
      const double w = weight(batch.weights_p, j, np);
      const double v = batch.phi_p[j];
      const double y = cur.eta * v - cur.nu;
      const double d1 = family.f_star_d1(y);
      const double d2 = family.f_star_d2(y);
      e_d1 += w * d1;
      e_d1_phi += w * d1 * v;
      e_d2 += w * d2;
      e_d2_phi += w * d2 * v;
      e_d2_phi2 += w * d2 * v * v;
    }
    const double g_eta = use_eta ? mean_q - e_d1_phi : 0.0;
    const double g_nu = use_nu ? -1.0 + e_d1 : 0.0;
    // Negated Hessian (positive semi-definite).
    double a = use_eta ? e_d2_phi2 : 1.0;
    double b = use_eta && use_nu ? -e_d2_phi : 0.0;
    double d = use_nu ? e_d2 : 1.0;
    const double grad_norm = std::hypot(g_eta, g_nu);
    if (grad_norm < 1e-13 * (1.0 + std::abs(cur.value))) return cur;

    bool improved = false;
    double damping = 0.0;
    for (int attempt = 0; attempt < 60 && !improved; ++attempt) {
      const double aa = a + damping;
      const double dd = d + damping;
      const double det = aa * dd - b * b;
      double step_eta = 0.0;
      double step_nu = 0.0;
      if (det > 0.0) {
        step_eta = (dd * g_eta - b * g_nu) / det;
        step_nu = (aa * g_nu - b * g_eta) / det;
      } else {
        damping = std::max(2.0 * damping, 1e-12 * (std::abs(a) + std::abs(d) + 1.0));
        continue;
      }
      double scale = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        const TransformMax trial{cur.eta + scale * step_eta, cur.nu + scale * step_nu, 0.0};
        const double v = lt_core(family, batch, trial.eta, trial.nu, false).value;
        if (std::isfinite(v) && v >= cur.value - 1e-15 * std::abs(cur.value)) {
          const bool tiny = std::abs(scale * step_eta) <= 1e-15 * (1.0 + std::abs(cur.eta)) &&
                            std::abs(scale * step_nu) <= 1e-15 * (1.0 + std::abs(cur.nu));
          cur = {trial.eta, trial.nu, std::max(v, cur.value)};
          if (tiny) return cur;
          improved = true;
          break;
        }
        scale *= 0.5;
      }
      if (!improved) damping = std::max(4.0 * damping, 1e-8 * (std::abs(a) + std::abs(d) + 1.0));
    }
    if (!improved) {
      if (grad_norm < 1e-8 * (1.0 + std::abs(cur.value))) return cur;
      throw ConvergenceError("transform optimization stalled");
    }
  }
  return cur;
}

namespace {

// min over nu of h(nu) = E_P[f*(eta phi - nu)] + nu for fixed eta > 0. h is
// convex with h' = 1 - E_P[f*'(eta phi - nu)] increasing, so the root of h'
// is bracketed and then found by safeguarded Newton.
double min_over_nu(const DivergenceFamily& family, std::span<const double> phi, std::span<const double> w,
                   double eta) {
  const std::size_t n = phi.size();
  const auto wt = [&](std::size_t j) { return w.empty() ? 1.0 / static_cast<double>(n) : w[j]; };
  const auto h = [&](double nu) {
    double s = nu;
    for (std::size_t j = 0; j < n; ++j) s += wt(j) * family.f_star(eta * phi[j] - nu);
    return s;
  };
  const auto derivs = [&](double nu, double& d1, double& d2) {
    d1 = 1.0;
    d2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = eta * phi[j] - nu;
      d1 -= wt(j) * family.f_star_d1(y);
      d2 += wt(j) * family.f_star_d2(y);
    }
  };
  double max_phi = -kInf;
  for (double v : phi) max_phi = std::max(max_phi, v);
  const bool barrier = family.is_alpha_like() && family.alpha() < 1.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double lo = barrier ? eta * max_phi : 0.0;
  double hi = barrier ? lo + 1.0 : 0.0;
  double step = 1.0;
  derivs(hi, d1, d2);
  while (!(d1 > 0.0)) {
    hi += step;
    step *= 2.0;
    derivs(hi, d1, d2);
    if (step > 1e300) throw ConvergenceError("UQ bound: no upper bracket for nu");
  }
  if (!barrier) {
    step = 1.0;
    lo = hi - step;
    derivs(lo, d1, d2);
    while (!(d1 < 0.0)) {
      lo -= step;
      step *= 2.0;
      derivs(lo, d1, d2);
      if (step > 1e300) throw ConvergenceError("UQ bound: no lower bracket for nu");
    }
  }
  double nu = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    derivs(nu, d1, d2);
    if (d1 == 0.0) break;
    if (d1 < 0.0) {
      lo = nu;
    } else {
      hi = nu;
    }
    double next = nu - d1 / d2;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - nu) <= 1e-15 * (1.0 + std::abs(nu)) || hi - lo <= 1e-15 * (1.0 + std::abs(nu))) {
      nu = next;
      break;
    }
    nu = next;
  }
  return h(nu);
}

double minimize_over_log_eta(const std::function<double(double)>& bound) {
  double lo = -3.0;
  double hi = 3.0;
  for (int expansion = 0; expansion <= 2; ++expansion) {
    const int grid = 60 + 20 * expansion;
    int best = 0;
    double best_value = kInf;
    for (int i = 0; i <= grid; ++i) {
      const double v = bound(std::pow(10.0, lo + (hi - lo) * i / grid));
      if (v < best_value) {
        best_value = v;
        best = i;
      }
    }
    if (best > 0 && best < grid) {
      const double a = lo + (hi - lo) * (best - 1) / grid;
      const double b = lo + (hi - lo) * (best + 1) / grid;
      const double x = golden_max([&](double le) { return -bound(std::pow(10.0, le)); }, a, b);
      return std::min(best_value, bound(std::pow(10.0, x)));
    }
    if (best == 0) lo -= 3.0;
    if (best == grid) hi += 3.0;
  }
  throw ConvergenceError("UQ bound minimum lies on the boundary of the eta search range");
}

}  // namespace

double uq_bound(const DivergenceFamily& family, std::span<const double> phi_p, double divergence,
                std::span<const double> weights_p) {
  if (!(divergence >= 0.0)) throw DomainError("UQ bound needs a non-negative divergence");
  if (divergence == 0.0) return weighted_mean(phi_p, weights_p);
  if (family.kind() == FamilyKind::kKL) return uq_bound_kl(phi_p, divergence, weights_p);
  return minimize_over_log_eta(
      [&](double eta) { return (min_over_nu(family, phi_p, weights_p, eta) + divergence) / eta; });
}

double uq_bound_kl(std::span<const double> phi_p, double divergence, std::span<const double> weights_p) {
  if (!(divergence >= 0.0)) throw DomainError("UQ bound needs a non-negative divergence");
  if (divergence == 0.0) return weighted_mean(phi_p, weights_p);
  return minimize_over_log_eta(
      [&](double eta) { return (log_mean_exp(phi_p, weights_p, eta) + divergence) / eta; });
}

std::string objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kLt:
      return "lt";
    case ObjectiveKind::kDv:
      return "dv";
    case ObjectiveKind::kImprovedDv:
      return "improved_dv";
    case ObjectiveKind::kApproxDv:
      return "approx_dv";
    case ObjectiveKind::kAlphaScale:
      return "alpha_scale";
    case ObjectiveKind::kAlphaScalePower:
      return "alpha_scale_power";
    case ObjectiveKind::kRenyi:
      return "renyi";
    case ObjectiveKind::kRenyiPowerApprox:
      return "renyi_power_approx";
    case ObjectiveKind::kChi2Hcr:
      return "chi2_hcr";
    case ObjectiveKind::kChi2Shift:
      return "chi2_shift";
  }
  return "unknown";
}

std::optional<ObjectiveKind> parse_objective(const std::string& name) {
  static constexpr std::array kinds = {ObjectiveKind::kLt,         ObjectiveKind::kDv,
                                       ObjectiveKind::kImprovedDv, ObjectiveKind::kApproxDv,
                                       ObjectiveKind::kAlphaScale, ObjectiveKind::kAlphaScalePower,
                                       ObjectiveKind::kRenyi,      ObjectiveKind::kRenyiPowerApprox,
                                       ObjectiveKind::kChi2Hcr,    ObjectiveKind::kChi2Shift};
  for (ObjectiveKind k : kinds) {
    if (objective_name(k) == name) return k;
  }
  return std::nullopt;
}

OutputConstraint ObjectiveSpec::output_constraint() const {
  switch (kind) {
    case ObjectiveKind::kLt:
      return family.is_alpha_like() && family.alpha() < 1.0 ? OutputConstraint::kNegative : OutputConstraint::kNone;
    case ObjectiveKind::kAlphaScale:
    case ObjectiveKind::kAlphaScalePower:
      return OutputConstraint::kPositive;
    default:
      return OutputConstraint::kNone;
  }
}

void ObjectiveSpec::validate() const {
  const std::string name = objective_name(kind);
  switch (kind) {
    case ObjectiveKind::kLt:
      return;
    case ObjectiveKind::kDv:
    case ObjectiveKind::kImprovedDv:
    case ObjectiveKind::kApproxDv:
      if (family.kind() != FamilyKind::kKL) throw DomainError(name + " requires the kl family");
      return;
    case ObjectiveKind::kAlphaScale:
      if (!family.is_alpha_like()) throw DomainError(name + " requires an alpha or hellinger family");
      return;
    case ObjectiveKind::kAlphaScalePower:
      if (!family.is_alpha_like() || family.alpha() > 1.0) {
        throw DomainError(name + " requires an alpha family with alpha in (0,1)");
      }
      return;
    case ObjectiveKind::kRenyi:
      check_alpha(renyi_alpha);
      return;
    case ObjectiveKind::kRenyiPowerApprox:
      if (!(renyi_alpha > 0.0 && renyi_alpha < 1.0)) throw DomainError(name + " requires alpha in (0,1)");
      return;
    case ObjectiveKind::kChi2Hcr:
    case ObjectiveKind::kChi2Shift:
      if (family.kind() != FamilyKind::kChiSquared) throw DomainError(name + " requires the chi2 family");
      return;
  }
}

TransformState ObjectiveSpec::default_transform() const {
  TransformState t;
  t.train_eta = kind == ObjectiveKind::kImprovedDv;
  t.train_beta = kind == ObjectiveKind::kAlphaScalePower;
  return t;
}

ObjectiveValue evaluate(const ObjectiveSpec& spec, const BatchEval& batch, const TransformState& transform) {
  switch (spec.kind) {
    case ObjectiveKind::kLt:
      if (transform.train_eta || transform.train_nu || transform.eta != 1.0 || transform.nu != 0.0) {
        return lt_transformed_objective(spec.family, batch, transform.eta, transform.nu);
      }
      return lt_objective(spec.family, batch);
    case ObjectiveKind::kDv:
      return dv_objective(batch);
    case ObjectiveKind::kImprovedDv:
      return improved_dv_objective(batch, transform.eta);
    case ObjectiveKind::kApproxDv:
      return approx_improved_dv(batch);
    case ObjectiveKind::kAlphaScale:
      return alpha_scale_objective(spec.family.alpha(), batch);
    case ObjectiveKind::kAlphaScalePower:
      return alpha_scale_power_objective(spec.family.alpha(), transform.beta, batch);
    case ObjectiveKind::kRenyi:
      return renyi_objective(spec.renyi_alpha, batch);
    case ObjectiveKind::kRenyiPowerApprox:
      return approx_power_renyi(spec.renyi_alpha, batch);
    case ObjectiveKind::kChi2Hcr:
      return chi2_hcr_objective(batch);
    case ObjectiveKind::kChi2Shift:
      return chi2_shift_objective(batch);
  }
  throw DomainError("unknown objective");
}

}  // namespace divgauge
