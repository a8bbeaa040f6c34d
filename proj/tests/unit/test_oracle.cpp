#include <cmath>

#include "divgauge/errors.hpp"
#include "divgauge/oracle.hpp"
#include "divgauge/stats.hpp"
#include "doctest.h"

using namespace divgauge;

namespace {

// Bhattacharyya coefficient of two 1-D Gaussians.
double bhattacharyya(double m1, double v1, double m2, double v2) {
  return std::sqrt(2.0 * std::sqrt(v1 * v2) / (v1 + v2)) * std::exp(-0.25 * (m1 - m2) * (m1 - m2) / (v1 + v2));
}

}  // namespace

TEST_CASE("identical measures have zero divergence") {
  const auto g = GaussianSpec::scalar(0.3, 1.7);
  for (const DivergenceSpec& s : {DivergenceSpec{DivergenceFamily::kl()}, DivergenceSpec{DivergenceFamily::hellinger()},
                                  DivergenceSpec{DivergenceFamily::chi_squared()}, DivergenceSpec{RenyiOrder{0.3}}}) {
    CHECK(std::abs(oracle_divergence(s, g, g).value) < 1e-9);
  }
}

TEST_CASE("KL of N(0,1/2) from N(0,1)") {
  const auto q = GaussianSpec::scalar(0.0, 0.5);
  const auto p = GaussianSpec::scalar(0.0, 1.0);
  const double expected = 0.5 * (0.5 - 1.0 - std::log(0.5));
  CHECK(expected == doctest::Approx(0.09657).epsilon(1e-4));
  CHECK(oracle_divergence(DivergenceFamily::kl(), q, p).value == doctest::Approx(expected).epsilon(1e-9));
  CHECK(gaussian_kl(q, p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Hellinger equals 4(1 - BC)") {
  const auto q = GaussianSpec::scalar(0.0, 0.5);
  const auto p = GaussianSpec::scalar(0.0, 1.0);
  const double bc = bhattacharyya(0, 0.5, 0, 1);
  CHECK(bc == doctest::Approx(0.97098).epsilon(1e-5));
  const double expected = 4.0 * (1.0 - bc);
  CHECK(oracle_divergence(DivergenceFamily::hellinger(), q, p).value == doctest::Approx(expected).epsilon(1e-8));

  const auto q2 = GaussianSpec::scalar(1.2, 0.7);
  const auto p2 = GaussianSpec::scalar(-0.4, 2.0);
  CHECK(oracle_divergence(DivergenceFamily::hellinger(), q2, p2).value ==
        doctest::Approx(4.0 * (1.0 - bhattacharyya(1.2, 0.7, -0.4, 2.0))).epsilon(1e-8));
}

TEST_CASE("quadrature agrees with closed forms across families") {
  const std::vector<std::pair<GaussianSpec, GaussianSpec>> pairs = {
      {GaussianSpec::scalar(0.0, 0.5), GaussianSpec::scalar(0.0, 1.0)},
      {GaussianSpec::scalar(1.0, 1.0), GaussianSpec::scalar(0.0, 1.0)},
      {GaussianSpec::scalar(-0.5, 1.5), GaussianSpec::scalar(0.3, 1.0)},
      {GaussianSpec::scalar(2.0, 0.3), GaussianSpec::scalar(0.0, 2.0)},
  };
  const std::vector<DivergenceSpec> specs = {DivergenceFamily::kl(), DivergenceFamily::hellinger(),
                                             DivergenceFamily::alpha(0.25), DivergenceFamily::alpha(1.5),
                                             DivergenceFamily::chi_squared(), RenyiOrder{0.5}, RenyiOrder{2.0}};
  for (const auto& [q, p] : pairs) {
    for (const auto& s : specs) {
      const double closed = gaussian_closed_form(s, q, p);
      const double quad = oracle_divergence(s, q, p).value;
      CHECK(quad == doctest::Approx(closed).epsilon(1e-8));
      CHECK(quad >= 0.0);
    }
  }
}

TEST_CASE("infinite divergence is reported as +inf") {
  // chi^2 of a wide Q against a narrow P is infinite.
  const auto q = GaussianSpec::scalar(0.0, 3.0);
  const auto p = GaussianSpec::scalar(0.0, 1.0);
  CHECK(std::isinf(oracle_divergence(DivergenceFamily::chi_squared(), q, p).value));
  CHECK(std::isinf(gaussian_closed_form(DivergenceFamily::alpha(2.0), q, p)));
}

TEST_CASE("diagonal covariances reduce per coordinate") {
  Eigen::VectorXd mq(3), vq(3), mp(3), vp(3);
  mq << 0.1, -0.2, 0.5;
  vq << 0.5, 1.2, 0.8;
  mp << 0.0, 0.0, 0.0;
  vp << 1.0, 1.0, 1.5;
  const auto q = GaussianSpec::diagonal(mq, vq);
  const auto p = GaussianSpec::diagonal(mp, vp);
  for (const DivergenceSpec& s : {DivergenceSpec{DivergenceFamily::kl()}, DivergenceSpec{DivergenceFamily::alpha(0.25)},
                                  DivergenceSpec{RenyiOrder{0.7}}}) {
    const auto r = oracle_divergence(s, q, p);
    CHECK_FALSE(r.monte_carlo);
    CHECK(r.value == doctest::Approx(gaussian_closed_form(s, q, p)).epsilon(1e-8));
  }
}

TEST_CASE("full covariance falls back to Monte Carlo with a standard error") {
  Eigen::MatrixXd cq(2, 2), cp(2, 2);
  cq << 1.0, 0.5, 0.5, 1.0;
  cp << 1.0, 0.0, 0.0, 1.0;
  const GaussianSpec q(Eigen::VectorXd::Zero(2), cq);
  const GaussianSpec p(Eigen::VectorXd::Zero(2), cp);
  const auto r = oracle_divergence(DivergenceFamily::hellinger(), q, p);
  CHECK(r.monte_carlo);
  const double closed = gaussian_closed_form(DivergenceFamily::hellinger(), q, p);
  CHECK(std::abs(r.value - closed) < 4.0 * r.std_error + 1e-12);
  CHECK(r.std_error < 2e-3);
  OracleOptions tight;
  tight.mc_samples = 1000;
  tight.mc_tol = 1e-6;
  CHECK_THROWS_AS(oracle_divergence(DivergenceFamily::kl(), q, p, tight), ConvergenceError);
}

TEST_CASE("Renyi identity with the alpha divergence") {
  const auto q = GaussianSpec::scalar(0.0, 0.5);
  const auto p = GaussianSpec::scalar(0.0, 1.0);
  const double a = 0.5;
  const double d = oracle_divergence(DivergenceFamily::alpha(a), q, p).value;
  const double r = oracle_divergence(RenyiOrder{a}, q, p).value;
  CHECK(r == doctest::Approx(std::log(a * (a - 1) * d + 1) / (a * (a - 1))).epsilon(1e-10));
}

TEST_CASE("non positive definite covariance is rejected") {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianSpec(Eigen::VectorXd::Zero(2), c), FactorizationError);
  CHECK_THROWS_AS(GaussianSpec::scalar(0.0, 0.0), FactorizationError);
  CHECK_NOTHROW(GaussianSpec::scalar(0.0, 1e-12));
}

TEST_CASE("quadrature measures are normalized and reproduce moments") {
  const auto q = GaussianSpec::scalar(0.0, 0.5);
  const auto p = GaussianSpec::scalar(0.0, 1.0);
  const auto m = quadrature_measures(q, p);
  std::vector<double> x2(m.nodes.size());
  for (std::size_t i = 0; i < x2.size(); ++i) x2[i] = m.nodes[i] * m.nodes[i];
  CHECK(weighted_mean(x2, m.weights_q) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(weighted_mean(x2, m.weights_p) == doctest::Approx(1.0).epsilon(1e-13));
}
