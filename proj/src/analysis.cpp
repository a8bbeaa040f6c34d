#include "divgauge/analysis.hpp"

#include <cmath>
#include <limits>

#include "divgauge/errors.hpp"
#include "divgauge/rng.hpp"
#include "divgauge/stats.hpp"

namespace divgauge {

std::string transform_set_name(TransformSet set) {
  switch (set) {
    case TransformSet::kIdentity:
      return "id";
    case TransformSet::kShift:
      return "shift";
    case TransformSet::kScale:
      return "scale";
    case TransformSet::kAffine:
      return "affine";
  }
  return "unknown";
}

double transformed_lt_value(const DivergenceFamily& family, TransformSet set, const QuadratureMeasures& measures,
                            const ScalarFunction& phi) {
  const auto batch = exact_batch(measures, phi);
  return sup_lt_transform(family, batch, set).value;
}

namespace {

struct Differences {
  double coarse = 0.0;
  double fine = 0.0;
  double extrapolated = 0.0;
};

Differences richardson(const std::function<double(double)>& diff, double eps, int order) {
  if (!(eps >= 1e-4 && eps <= 1e-1)) throw DomainError("Gateaux step must lie in [1e-4, 1e-1]");
  Differences d;
  d.coarse = diff(eps);
  d.fine = diff(eps / 2.0);
  // Both central differences have error expansions in eps^2.
  const double k = std::pow(2.0, order);
  d.extrapolated = (k * d.fine - d.coarse) / (k - 1.0);
  return d;
}

void check_agreement(const Differences& d) {
  const double scale = std::max(1.0, std::abs(d.extrapolated));
  if (std::abs(d.fine - d.coarse) > 1e-3 * scale) {
    throw ConvergenceError("Richardson differences disagree: " + std::to_string(d.coarse) + " vs " +
                           std::to_string(d.fine));
  }
}

}  // namespace

double gateaux_second_derivative(const DivergenceFamily& family, TransformSet set, const QuadratureMeasures& measures,
                                 const ScalarFunction& phi, const ScalarFunction& psi, double eps) {
  auto j = [&](double e) {
    return transformed_lt_value(family, set, measures, [&](double x) { return phi(x) + e * psi(x); });
  };
  const double j0 = j(0.0);
  const auto d = richardson([&](double e) { return (j(e) - 2.0 * j0 + j(-e)) / (e * e); }, eps, 2);
  check_agreement(d);
  return d.extrapolated;
}

double gateaux_first_derivative(const DivergenceFamily& family, TransformSet set, const QuadratureMeasures& measures,
                                const ScalarFunction& phi, const ScalarFunction& psi, double eps) {
  auto j = [&](double e) {
    return transformed_lt_value(family, set, measures, [&](double x) { return phi(x) + e * psi(x); });
  };
  const auto d = richardson([&](double e) { return (j(e) - j(-e)) / (2.0 * e); }, eps, 2);
  check_agreement(d);
  return d.extrapolated;
}

namespace {

ScalarFunction legendre_optimizer(const DivergenceFamily& family, const GaussianSpec& q, const GaussianSpec& p) {
  return [family, q, p](double x) { return family.f_prime(std::exp(q.log_density(x) - p.log_density(x))); };
}

}  // namespace

CurvatureReport fdiv_hessian_closed_forms(const DivergenceFamily& family, const GaussianSpec& q, const GaussianSpec& p,
                                          const ScalarFunction& psi, const std::string& direction) {
  if (q.dim() != 1 || p.dim() != 1) throw DomainError("closed-form curvatures need 1-D Gaussians");
  const auto measures = quadrature_measures(q, p);
  const auto phi = legendre_optimizer(family, q, p);
  // Moments under P of (f*)''(phi*) times powers of phi* and psi.
  double b = 0.0, m1 = 0.0, m2 = 0.0, s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < measures.nodes.size(); ++i) {
    const double x = measures.nodes[i];
    const double w = measures.weights_p[i];
    const double f = phi(x);
    const double g = psi(x);
    const double t = w * family.f_star_d2(f);
    b += t;
    m1 += t * f;
    m2 += t * f * f;
    s0 += t * g;
    s1 += t * f * g;
    s2 += t * g * g;
  }
  m1 /= b;
  m2 /= b;
  s0 /= b;
  s1 /= b;
  s2 /= b;
  CurvatureReport r;
  r.direction = direction;
  r.truncation_radius = 12.0;
  r.numeric.fill(std::numeric_limits<double>::quiet_NaN());
  r.closed_form[0] = -b * s2;
  r.closed_form[1] = -b * (s2 - s0 * s0);
  r.closed_form[2] = -b * (s2 - s1 * s1 / m2);
  const double det = m2 - m1 * m1;
  if (!(det > 1e-12 * std::max(1.0, m2))) throw DomainError("affine curvature is undefined for Q = P");
  r.closed_form[3] = -b * (s2 - (s1 * s1 - 2.0 * m1 * s0 * s1 + m2 * s0 * s0) / det);
  return r;
}

CurvatureReport kl_hessian_closed_forms(const GaussianSpec& q, const GaussianSpec& p, const ScalarFunction& psi,
                                        const std::string& direction) {
  return fdiv_hessian_closed_forms(DivergenceFamily::kl(), q, p, psi, direction);
}

CurvatureReport curvature_report(const DivergenceFamily& family, const GaussianSpec& q, const GaussianSpec& p,
                                 const ScalarFunction& psi, const std::string& direction, double eps) {
  auto report = fdiv_hessian_closed_forms(family, q, p, psi, direction);
  report.epsilon = eps;
  const auto measures = quadrature_measures(q, p);
  const auto phi = legendre_optimizer(family, q, p);
  for (std::size_t k = 0; k < kCurvatureSets.size(); ++k) {
    report.numeric[k] = gateaux_second_derivative(family, kCurvatureSets[k], measures, phi, psi, eps);
  }
  return report;
}

std::vector<double> run_repeats(std::size_t repeats, const std::function<double(std::size_t)>& f, Execution exec) {
  std::vector<double> out(repeats);
  if (exec == Execution::kSerial) {
    for (std::size_t r = 0; r < repeats; ++r) out[r] = f(r);
    return out;
  }
  const auto n = static_cast<long>(repeats);
#pragma omp parallel for schedule(dynamic)
  for (long r = 0; r < n; ++r) out[static_cast<std::size_t>(r)] = f(static_cast<std::size_t>(r));
  return out;
}

namespace {

std::vector<double> draw_mapped(const GaussianSpec& g, std::size_t n, Stream& stream, const ScalarFunction& phi) {
  const double mu = g.mean()(0);
  const double sd = std::sqrt(g.cov()(0, 0));
  std::vector<double> out(n);
  for (auto& v : out) v = phi(mu + sd * stream.normal());
  return out;
}

void fill_mc(VarianceReport& report, const std::vector<double>& values) {
  const auto n = static_cast<double>(report.n);
  const double var = sample_variance(values);
  report.mc = n * var;
  report.mc_se = report.mc * std::sqrt(2.0 / static_cast<double>(values.size() - 1));
  report.mc_mean = weighted_mean(values, {});
}

void check_1d(const GaussianSpec& q, const GaussianSpec& p, std::size_t n, std::size_t repeats) {
  if (q.dim() != 1 || p.dim() != 1) throw DomainError("variance reports need 1-D Gaussians");
  if (n < 2 || repeats < 2) throw DomainError("variance reports need n >= 2 and at least two repeats");
}

}  // namespace

VarianceReport lt_variance(const DivergenceFamily& family, const ScalarFunction& phi, const GaussianSpec& q,
                           const GaussianSpec& p, std::size_t n, std::size_t repeats, std::uint64_t seed,
                           MomentMode mode, Execution exec) {
  check_1d(q, p, n, repeats);
  VarianceReport report;
  report.n = n;
  report.repeats = repeats;
  auto fstar_phi = [&](double x) { return family.f_star(phi(x)); };
  if (mode == MomentMode::kExact) {
    const auto m = quadrature_measures(q, p);
    std::vector<double> vq(m.nodes.size()), vp(m.nodes.size());
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      vq[i] = phi(m.nodes[i]);
      vp[i] = fstar_phi(m.nodes[i]);
    }
    report.formula = weighted_variance(vq, m.weights_q) + weighted_variance(vp, m.weights_p);
  } else {
    Stream sq(seed, StreamRole::kAux, 1), sp(seed, StreamRole::kAux, 2);
    const auto vq = draw_mapped(q, 1000000, sq, phi);
    const auto vp = draw_mapped(p, 1000000, sp, fstar_phi);
    report.formula = sample_variance(vq) + sample_variance(vp);
  }
  const auto values = run_repeats(
      repeats,
      [&](std::size_t r) {
        Stream sq(seed, StreamRole::kEvalQ, r), sp(seed, StreamRole::kEvalP, r);
        BatchEval batch;
        batch.phi_q = draw_mapped(q, n, sq, phi);
        batch.phi_p = draw_mapped(p, n, sp, phi);
        return lt_objective(family, batch).value;
      },
      exec);
  fill_mc(report, values);
  return report;
}

VarianceReport alpha_scale_asymptotic_variance(double alpha, const ScalarFunction& phi, const GaussianSpec& q,
                                               const GaussianSpec& p, std::size_t n, std::size_t repeats,
                                               std::uint64_t seed, Execution exec) {
  check_1d(q, p, n, repeats);
  const double a = alpha;
  const double expo = a / (a - 1.0);
  const auto m = quadrature_measures(q, p);
  std::vector<double> vq(m.nodes.size()), vp(m.nodes.size());
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    vq[i] = phi(m.nodes[i]);
    vp[i] = std::pow(phi(m.nodes[i]), expo);
  }
  const double ma = weighted_mean(vq, m.weights_q);
  const double mb = weighted_mean(vp, m.weights_p);
  const double g = std::pow(ma, a) * std::pow(mb, 1.0 - a);
  VarianceReport report;
  report.n = n;
  report.repeats = repeats;
  report.formula = g * g / (ma * ma * (a - 1.0) * (a - 1.0)) * weighted_variance(vq, m.weights_q) +
                   g * g / (mb * mb * a * a) * weighted_variance(vp, m.weights_p);
  const auto values = run_repeats(
      repeats,
      [&](std::size_t r) {
        Stream sq(seed, StreamRole::kEvalQ, r), sp(seed, StreamRole::kEvalP, r);
        BatchEval batch;
        batch.phi_q = draw_mapped(q, n, sq, phi);
        batch.phi_p = draw_mapped(p, n, sp, phi);
        return alpha_scale_objective(a, batch).value;
      },
      exec);
  fill_mc(report, values);
  return report;
}

double hellinger_relative_variance(double divergence) {
  if (!(divergence > 0.0 && divergence < 8.0)) throw DomainError("Hellinger relative variance needs 0 < D < 8");
  return (8.0 - divergence) / (2.0 * divergence);
}

namespace {

constexpr double kDegenerateEstimate = 1e-4;

}  // namespace

double data_processing_check(double with_kernel, double without_kernel) {
  if (!(without_kernel >= kDegenerateEstimate)) {
    throw DegenerateError("data-processing denominator estimate is below 1e-4");
  }
  return with_kernel / without_kernel;
}

double product_property_check(double alpha, std::span<const double> factors, double joint) {
  if (factors.empty()) throw DomainError("product check needs at least one factor");
  if (!(joint >= kDegenerateEstimate)) throw DegenerateError("joint estimate is below 1e-4");
  const double c = alpha * (alpha - 1.0);
  double prod = 1.0;
  for (double d : factors) prod *= c * d + 1.0;
  return (prod - 1.0) / c / joint;
}

}  // namespace divgauge
