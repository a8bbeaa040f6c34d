#include "divgauge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "divgauge/errors.hpp"
#include "divgauge/quadrature.hpp"
#include "divgauge/stats.hpp"

namespace divgauge {

namespace {

struct OrderInfo {
  bool is_kl = false;
  bool is_renyi = false;
  double alpha = 1.0;
};

OrderInfo order_of(const DivergenceSpec& spec) {
  OrderInfo info;
  if (const auto* fam = std::get_if<DivergenceFamily>(&spec)) {
    info.is_kl = fam->kind() == FamilyKind::kKL;
    info.alpha = fam->alpha();
  } else {
    const double a = std::get<RenyiOrder>(spec).alpha;
    DivergenceFamily::alpha(a);  // range check
    info.is_renyi = true;
    info.alpha = a;
  }
  return info;
}

// D_f or R_a from the alpha moment M = E_P[r^a].
double from_moment(const OrderInfo& info, double log_moment) {
  const double a = info.alpha;
  if (std::isinf(log_moment) && log_moment > 0) return kInf;
  if (info.is_renyi) return log_moment / (a * (a - 1.0));
  return std::expm1(log_moment) / (a * (a - 1.0));
}

void check_dims(const GaussianSpec& q, const GaussianSpec& p) {
  if (q.dim() != p.dim()) throw DomainError("Q and P dimensions differ");
}

double scalar_kl_quadrature(const GaussianSpec& q, const GaussianSpec& p, double tol) {
  const double sq = std::sqrt(q.cov()(0, 0));
  const auto integrand = [&](double x) {
    const double lq = q.log_density(x);
    return std::exp(lq) * (lq - p.log_density(x));
  };
  return integrate_real_line(integrand, q.mean()(0), sq, tol).value;
}

// log int q^a p^{1-a} dx by quadrature, or +inf when the exponent is not
// integrable (a/s_q^2 + (1-a)/s_p^2 <= 0).
double scalar_log_moment_quadrature(double a, const GaussianSpec& q, const GaussianSpec& p, double tol) {
  const double vq = q.cov()(0, 0);
  const double vp = p.cov()(0, 0);
  const double precision = a / vq + (1.0 - a) / vp;
  if (!(precision > 0.0)) return kInf;
  // Centre and scale of the (unnormalized) Gaussian integrand.
  const double center = (a * q.mean()(0) / vq + (1.0 - a) * p.mean()(0) / vp) / precision;
  const double scale = 1.0 / std::sqrt(precision);
  const double log_peak = a * q.log_density(center) + (1.0 - a) * p.log_density(center);
  const auto integrand = [&](double x) {
    return std::exp(a * q.log_density(x) + (1.0 - a) * p.log_density(x) - log_peak);
  };
  // Relative tolerance on the peak-normalized integral (whose size is ~scale).
  const double value = integrate_real_line(integrand, center, scale, tol * std::min(1.0, scale), tol).value;
  return log_peak + std::log(value);
}

OracleResult monte_carlo(const OrderInfo& info, const GaussianSpec& q, const GaussianSpec& p,
                         const OracleOptions& options) {
  if (!info.is_kl && !std::isfinite(gaussian_log_alpha_moment(info.alpha, q, p))) {
    return {kInf, 0.0, true};
  }
  Stream stream(options.mc_seed, StreamRole::kAux, 0);
  const std::size_t n = options.mc_samples;
  const std::size_t chunk = 4096;
  std::vector<double> values;
  values.reserve(n);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    const SampleMatrix x = sample_gaussian(q, m, stream);
    for (std::size_t i = 0; i < m; ++i) {
      const double lr = log_density_ratio(q, p, x.row(i));
      // KL: E_Q[log r]; alpha: E_Q[r^{a-1}] = E_P[r^a].
      values.push_back(info.is_kl ? lr : std::exp((info.alpha - 1.0) * lr));
    }
  }
  const MeanAndError me = mean_and_standard_error(values);
  OracleResult result;
  result.monte_carlo = true;
  if (info.is_kl) {
    result.value = me.mean;
    result.std_error = me.std_error;
  } else {
    const double a = info.alpha;
    if (info.is_renyi) {
      result.value = std::log(me.mean) / (a * (a - 1.0));
      result.std_error = me.std_error / (me.mean * std::abs(a * (a - 1.0)));
    } else {
      result.value = (me.mean - 1.0) / (a * (a - 1.0));
      result.std_error = me.std_error / std::abs(a * (a - 1.0));
    }
  }
  if (!(result.std_error <= options.mc_tol)) {
    std::ostringstream msg;
    msg << "Monte Carlo standard error " << result.std_error << " exceeds tolerance " << options.mc_tol;
    throw ConvergenceError(msg.str());
  }
  return result;
}

}  // namespace

OracleResult oracle_divergence(const DivergenceSpec& spec, const GaussianSpec& q, const GaussianSpec& p,
                               const OracleOptions& options) {
  check_dims(q, p);
  const OrderInfo info = order_of(spec);
  if (q.dim() > 1 && !(q.is_diagonal() && p.is_diagonal())) return monte_carlo(info, q, p, options);

  OracleResult result;
  if (info.is_kl) {
    for (std::size_t i = 0; i < q.dim(); ++i) {
      result.value += scalar_kl_quadrature(q.marginal(i), p.marginal(i), options.quad_tol);
    }
    return result;
  }
  double log_moment = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    log_moment += scalar_log_moment_quadrature(info.alpha, q.marginal(i), p.marginal(i), options.quad_tol);
  }
  result.value = from_moment(info, log_moment);
  return result;
}

double gaussian_kl(const GaussianSpec& q, const GaussianSpec& p) {
  check_dims(q, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(p.cov());
  const Eigen::VectorXd diff = p.mean() - q.mean();
  const double trace = llt.solve(q.cov()).trace();
  const double quad = diff.dot(llt.solve(diff));
  const double d = static_cast<double>(q.dim());
  return 0.5 * (trace + quad - d + p.log_det() - q.log_det());
}

double gaussian_log_alpha_moment(double a, const GaussianSpec& q, const GaussianSpec& p) {
  check_dims(q, p);
  // a log q + (1-a) log p = -x'Lx/2 + h'x - c/2 + const, integrated in closed
  // form when L = a Sq^{-1} + (1-a) Sp^{-1} is positive definite.
  const Eigen::MatrixXd iq = q.cov().inverse();
  const Eigen::MatrixXd ip = p.cov().inverse();
  const Eigen::MatrixXd precision = a * iq + (1.0 - a) * ip;
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) return kInf;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < precision.rows(); ++i) {
    const double l = llt.matrixLLT()(i, i);
    if (!(l > 0.0)) return kInf;
    log_det += 2.0 * std::log(l);
  }
  const Eigen::VectorXd h = a * iq * q.mean() + (1.0 - a) * ip * p.mean();
  const double c = a * q.mean().dot(iq * q.mean()) + (1.0 - a) * p.mean().dot(ip * p.mean());
  return -0.5 * log_det + 0.5 * h.dot(llt.solve(h)) - 0.5 * c - 0.5 * a * q.log_det() -
         0.5 * (1.0 - a) * p.log_det();
}

double gaussian_closed_form(const DivergenceSpec& spec, const GaussianSpec& q, const GaussianSpec& p) {
  const OrderInfo info = order_of(spec);
  if (info.is_kl) return gaussian_kl(q, p);
  return from_moment(info, gaussian_log_alpha_moment(info.alpha, q, p));
}

QuadratureMeasures quadrature_measures(const GaussianSpec& q, const GaussianSpec& p, double radius, int panels) {
  if (q.dim() != 1 || p.dim() != 1) throw DomainError("quadrature measures need 1-D Gaussians");
  const double sq = std::sqrt(q.cov()(0, 0));
  const double sp = std::sqrt(p.cov()(0, 0));
  QuadratureMeasures m;
  m.lower = std::min(q.mean()(0) - radius * sq, p.mean()(0) - radius * sp);
  m.upper = std::max(q.mean()(0) + radius * sq, p.mean()(0) + radius * sp);
  const NodeRule rule = composite_kronrod(m.lower, m.upper, panels);
  m.nodes = rule.nodes;
  m.weights_q.resize(m.nodes.size());
  m.weights_p.resize(m.nodes.size());
  double zq = 0.0;
  double zp = 0.0;
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    m.weights_q[i] = rule.weights[i] * std::exp(q.log_density(m.nodes[i]));
    m.weights_p[i] = rule.weights[i] * std::exp(p.log_density(m.nodes[i]));
    zq += m.weights_q[i];
    zp += m.weights_p[i];
  }
  for (auto& w : m.weights_q) w /= zq;
  for (auto& w : m.weights_p) w /= zp;
  return m;
}

BatchEval exact_batch(const QuadratureMeasures& m, const std::function<double(double)>& phi) {
  BatchEval batch;
  batch.phi_q.resize(m.nodes.size());
  for (std::size_t i = 0; i < m.nodes.size(); ++i) batch.phi_q[i] = phi(m.nodes[i]);
  batch.phi_p = batch.phi_q;
  batch.weights_q = m.weights_q;
  batch.weights_p = m.weights_p;
  return batch;
}

}  // namespace divgauge
