#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "divgauge/divergence.hpp"
#include "divgauge/function_space.hpp"
#include "divgauge/gaussian.hpp"
#include "divgauge/objectives.hpp"
#include "divgauge/oracle.hpp"

namespace divgauge {

using ScalarFunction = std::function<double(double)>;

// Transformation families in curvature order: identity, shift, scale, affine.
inline constexpr std::array<TransformSet, 4> kCurvatureSets{TransformSet::kIdentity, TransformSet::kShift,
                                                             TransformSet::kScale, TransformSet::kAffine};
std::string transform_set_name(TransformSet set);

// sup over the transform set of the LT objective of phi under the discrete
// measures (exact expectations).
double transformed_lt_value(const DivergenceFamily& family, TransformSet set, const QuadratureMeasures& measures,
                            const ScalarFunction& phi);

// Second Gateaux derivative of J(e) = H_T[phi + e psi] at e = 0: central
// second differences at eps and eps/2 combined by Richardson extrapolation.
// ConvergenceError when the two differences disagree by more than 1e-3
// relative (absolute below unit scale).
double gateaux_second_derivative(const DivergenceFamily& family, TransformSet set, const QuadratureMeasures& measures,
                                 const ScalarFunction& phi, const ScalarFunction& psi, double eps = 1e-2);
// First derivative, central differences with the same extrapolation.
double gateaux_first_derivative(const DivergenceFamily& family, TransformSet set, const QuadratureMeasures& measures,
                                const ScalarFunction& phi, const ScalarFunction& psi, double eps = 1e-2);

struct CurvatureReport {
  std::string direction;
  std::array<double, 4> closed_form{};  // identity, shift, scale, affine
  std::array<double, 4> numeric{};      // NaN when not computed
  double epsilon = 1e-2;
  double truncation_radius = 12.0;
};

// Closed-form Hessians at phi* = f'(dQ/dP) for 1-D Gaussians under the
// tilted measure dP* ~ (f*)''(phi*) dP with b = E_P[(f*)''(phi*)]:
//   identity  -b E*[psi^2]
//   shift     -b Var*[psi]
//   scale     -b (E*[psi^2] - E*[phi* psi]^2 / E*[phi*^2])
//   affine    -b (E*[psi^2] - q' A^{-1} q), q = (E*[phi* psi], E*[psi]),
//             A = [[E*[phi*^2], E*[phi*]], [E*[phi*], 1]]
// DomainError when Q = P (degenerate affine system).
CurvatureReport fdiv_hessian_closed_forms(const DivergenceFamily& family, const GaussianSpec& q, const GaussianSpec& p,
                                          const ScalarFunction& psi, const std::string& direction);
CurvatureReport kl_hessian_closed_forms(const GaussianSpec& q, const GaussianSpec& p, const ScalarFunction& psi,
                                        const std::string& direction);
// Closed forms plus the numeric Gateaux derivatives for all four sets.
CurvatureReport curvature_report(const DivergenceFamily& family, const GaussianSpec& q, const GaussianSpec& p,
                                 const ScalarFunction& psi, const std::string& direction, double eps = 1e-2);

struct VarianceReport {
  std::size_t n = 0;
  std::size_t repeats = 0;
  double formula = 0.0;  // limit of n Var
  double mc = 0.0;       // n times the sample variance over repeats
  double mc_se = 0.0;    // standard error of mc
  double mc_mean = 0.0;  // mean estimate over repeats
};

enum class MomentMode { kExact, kEmpirical };

// n Var of the LT objective: Var_Q[phi] + Var_P[f*(phi)].
VarianceReport lt_variance(const DivergenceFamily& family, const ScalarFunction& phi, const GaussianSpec& q,
                           const GaussianSpec& p, std::size_t n, std::size_t repeats, std::uint64_t seed,
                           MomentMode mode = MomentMode::kExact, Execution exec = Execution::kParallel);

// n Var of the alpha-scale objective for positive phi:
//   G^2/(A^2 (a-1)^2) Var_Q[phi] + G^2/(B^2 a^2) Var_P[phi^{a/(a-1)}]
// with A = E_Q phi, B = E_P phi^{a/(a-1)}, G = A^a B^{1-a}.
VarianceReport alpha_scale_asymptotic_variance(double alpha, const ScalarFunction& phi, const GaussianSpec& q,
                                               const GaussianSpec& p, std::size_t n, std::size_t repeats,
                                               std::uint64_t seed, Execution exec = Execution::kParallel);

// Relative asymptotic variance of the Hellinger estimator at the optimum:
// (8 - D) / (2 D) for 0 < D < 8; DomainError otherwise.
double hellinger_relative_variance(double divergence);

// D(Q x kappa || P x kappa) / D(Q || P).
double data_processing_check(double with_kernel, double without_kernel);
// [(prod_i (a(a-1) D_i + 1) - 1) / (a(a-1))] / D_joint.
double product_property_check(double alpha, std::span<const double> factors, double joint);

// Runs f(r) for r = 0..repeats-1 and returns the results in order.
std::vector<double> run_repeats(std::size_t repeats, const std::function<double(std::size_t)>& f,
                                Execution exec = Execution::kParallel);

}  // namespace divgauge
