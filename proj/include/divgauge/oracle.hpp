#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "divgauge/divergence.hpp"
#include "divgauge/gaussian.hpp"
#include "divgauge/objectives.hpp"

namespace divgauge {

// Renyi divergence of order alpha in the normalization
// R_a = log E_P[(dQ/dP)^a] / (a (a - 1)), so that R_a = log(a(a-1) D_a + 1) / (a(a-1)).
struct RenyiOrder {
  double alpha;
};

using DivergenceSpec = std::variant<DivergenceFamily, RenyiOrder>;

struct OracleOptions {
  double quad_tol = 1e-9;
  std::size_t mc_samples = 1'000'000;
  // Largest acceptable Monte Carlo standard error.
  double mc_tol = 1e-2;
  std::uint64_t mc_seed = 0x5eed;
};

struct OracleResult {
  double value = 0.0;
  double std_error = 0.0;
  bool monte_carlo = false;
};

// Ground-truth D_f(Q||P) or R_a(Q||P) for Gaussians.
//  - 1-D: adaptive Gauss-Kronrod on the real line.
//  - diagonal covariances: per-coordinate quadrature combined exactly
//    (KL adds; the alpha moment E_P[r^a] multiplies).
//  - otherwise: Monte Carlo under Q with the standard error reported.
// Returns +inf when the divergence is infinite.
OracleResult oracle_divergence(const DivergenceSpec& spec, const GaussianSpec& q, const GaussianSpec& p,
                               const OracleOptions& options = {});

// Closed forms for arbitrary covariances (used for the mutual-information
// targets and as an independent cross-check of the quadrature path).
double gaussian_kl(const GaussianSpec& q, const GaussianSpec& p);
// log E_P[(dQ/dP)^a] = log int q^a p^{1-a}; +inf when not integrable.
double gaussian_log_alpha_moment(double alpha, const GaussianSpec& q, const GaussianSpec& p);
double gaussian_closed_form(const DivergenceSpec& spec, const GaussianSpec& q, const GaussianSpec& p);

// Discrete stand-in for exact expectations under two 1-D Gaussians: shared
// composite Kronrod nodes with weights proportional to q(x_i) and p(x_i),
// each normalized to one.
struct QuadratureMeasures {
  std::vector<double> nodes;
  std::vector<double> weights_q;
  std::vector<double> weights_p;
  double lower = 0.0;
  double upper = 0.0;
};

QuadratureMeasures quadrature_measures(const GaussianSpec& q, const GaussianSpec& p, double radius = 12.0,
                                       int panels = 240);

// A weighted batch holding phi on the quadrature nodes under both measures.
BatchEval exact_batch(const QuadratureMeasures& m, const std::function<double(double)>& phi);

}  // namespace divgauge
