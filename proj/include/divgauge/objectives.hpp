#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "divgauge/divergence.hpp"

namespace divgauge {

// Test-function values on a Q-batch and a P-batch. Optional weights turn the
// batch into a general discrete measure (used for quadrature-backed exact
// expectations); empty weights mean the uniform empirical measure.
struct BatchEval {
  std::vector<double> phi_q;
  std::vector<double> phi_p;
  std::vector<double> weights_q;
  std::vector<double> weights_p;

  std::size_t n_q() const { return phi_q.size(); }
  std::size_t n_p() const { return phi_p.size(); }
  // Throws DomainError on fewer than two entries, NaN values, or weight
  // vectors of the wrong length.
  void validate() const;
};

struct TransformState {
  double eta = 1.0;
  double nu = 0.0;
  double beta = 1.0;
  bool train_eta = false;
  bool train_nu = false;
  bool train_beta = false;
};

struct TransformGrad {
  double eta = 0.0;
  double nu = 0.0;
  double beta = 0.0;
};

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> grad_phi_q;
  std::vector<double> grad_phi_p;
  TransformGrad grad_transform;
  // Transform parameter picked by an inner closed-form step (approximate
  // improved objectives); 0 otherwise.
  double inner_step = 0.0;
};

// Legendre-transform objective E_Q[eta phi - nu] - E_P[f*(eta phi - nu)].
// -inf when f* is infinite at a P-entry of a family without sign
// restriction; DomainError for alpha families.
ObjectiveValue lt_objective(const DivergenceFamily& family, const BatchEval& batch);
ObjectiveValue lt_transformed_objective(const DivergenceFamily& family, const BatchEval& batch, double eta,
                                        double nu);

// E_Q[phi] - log E_P[e^phi].
ObjectiveValue dv_objective(const BatchEval& batch);
// eta E_Q[phi] - log E_P[e^{eta phi}].
ObjectiveValue improved_dv_objective(const BatchEval& batch, double eta);
// improved DV at eta = 1 + d, with d the second-order optimal step
// (E_Q phi - E_{P_phi} phi) / Var_{P_phi} phi under dP_phi ~ e^phi dP.
// floor_at_dv returns max(that, DV).
ObjectiveValue approx_improved_dv(const BatchEval& batch, bool floor_at_dv = false);

// (E_Q[phi]^a E_P[phi^{a/(a-1)}]^{1-a} - 1) / (a(a-1)); phi > 0 for a < 1,
// phi >= 0 for a > 1.
ObjectiveValue alpha_scale_objective(double alpha, const BatchEval& batch);
// Same with phi replaced by phi^beta; a in (0,1).
ObjectiveValue alpha_scale_power_objective(double alpha, double beta, const BatchEval& batch);

// (a-1)^{-1} log E_Q[e^{(a-1)g}] - a^{-1} log E_P[e^{a g}].
ObjectiveValue renyi_objective(double alpha, const BatchEval& batch);
// Renyi objective at (1 + d) g with d the second-order optimal power step.
ObjectiveValue approx_power_renyi(double alpha, const BatchEval& batch);

// (E_Q phi - E_P phi)^2 / Var_P phi, and E_Q phi - E_P phi - Var_P phi / 4.
// Both target chi^2(Q||P) = E_P[(dQ/dP)^2] - 1.
ObjectiveValue chi2_hcr_objective(const BatchEval& batch);
ObjectiveValue chi2_shift_objective(const BatchEval& batch);

// Offline inner optimizers for tests and diagnostics.
struct ScalarMax {
  double argmax = 0.0;
  double value = 0.0;
};
// sup over eta in [lo, hi] of improved DV: dense grid, then golden section
// around the best node. The identity (eta = 1) is always among the candidates.
ScalarMax sup_improved_dv(const BatchEval& batch, double lo = 0.01, double hi = 4.0, int grid = 400);
ScalarMax sup_alpha_scale_power(double alpha, const BatchEval& batch, double lo = 0.1, double hi = 5.0,
                                int grid = 400);

enum class TransformSet { kIdentity, kShift, kScale, kAffine };

struct TransformMax {
  double eta = 1.0;
  double nu = 0.0;
  double value = 0.0;
};
// sup of the LT objective over the chosen transform set, by damped Newton
// (the objective is concave in (eta, nu)). Throws ConvergenceError when the
// iteration stalls.
TransformMax sup_lt_transform(const DivergenceFamily& family, const BatchEval& batch, TransformSet set,
                              double eta0 = 1.0, double nu0 = 0.0);

// Upper bound on E_Q[phi] given D_f(Q||P) <= divergence:
// inf_{eta>0, nu} (E_P[f*(eta phi - nu)] + nu + divergence) / eta.
// With divergence = 0 the infimum is the eta -> 0 limit E_P[phi].
// Optional weights as in BatchEval.
double uq_bound(const DivergenceFamily& family, std::span<const double> phi_p, double divergence,
                std::span<const double> weights_p = {});
// KL specialization inf_{eta>0} (log E_P[e^{eta phi}] + divergence) / eta.
double uq_bound_kl(std::span<const double> phi_p, double divergence, std::span<const double> weights_p = {});

enum class ObjectiveKind {
  kLt,
  kDv,
  kImprovedDv,
  kApproxDv,
  kAlphaScale,
  kAlphaScalePower,
  kRenyi,
  kRenyiPowerApprox,
  kChi2Hcr,
  kChi2Shift,
};

std::string objective_name(ObjectiveKind kind);
std::optional<ObjectiveKind> parse_objective(const std::string& name);

// What the test function must satisfy for the objective to be defined.
enum class OutputConstraint { kNone, kPositive, kNegative };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kLt;
  DivergenceFamily family = DivergenceFamily::kl();
  // Order for the Renyi objectives.
  double renyi_alpha = 0.5;

  OutputConstraint output_constraint() const;
  // Throws DomainError if the objective does not apply to the family.
  void validate() const;
  // Transform scalars trained jointly with the model by default.
  TransformState default_transform() const;
};

ObjectiveValue evaluate(const ObjectiveSpec& spec, const BatchEval& batch, const TransformState& transform);

}  // namespace divgauge
