#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divgauge/data.hpp"
#include "divgauge/function_space.hpp"
#include "divgauge/objectives.hpp"

namespace divgauge {

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t minibatch = 100;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;
  std::size_t eval_samples = 5000;
  // Extra transform-only updates per model step on the same minibatch
  // (nested multiscale loop); 0 = joint updates only.
  std::size_t transform_substeps = 0;

  // Throws DomainError on non-positive sizes or rates.
  void validate() const;
};

struct AdamState {
  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

// One bias-corrected Adam update in the ascent direction.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TracePoint {
  std::size_t step = 0;
  double objective_eval = 0.0;
  double eta = 1.0;
  double nu = 0.0;
  double beta = 1.0;
  double wall_ms = 0.0;
};

struct RunRecord {
  std::vector<TracePoint> trace;
  double final_estimate = 0.0;
  double final_std_error = 0.0;
  TransformState transform_final;
  ParamVector params;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::size_t skipped_steps = 0;
};

// Objective value on (xq, xp) with its gradient in the model parameters and
// in the trained transform scalars (in the raw eta, nu, beta coordinates).
struct ObjectiveGradient {
  ObjectiveValue value;
  ParamVector grad_params;
};

ObjectiveGradient objective_gradient(const ObjectiveSpec& objective, const TestFunction& model,
                                     std::span<const double> params, const TransformState& transform,
                                     const SampleMatrix& xq, const SampleMatrix& xp);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Objective on fixed values with a standard error: delta-method variance for
// the LT, DV-type and alpha-scale objectives, batch-split otherwise.
Estimate estimate_from_values(const ObjectiveSpec& objective, const BatchEval& batch, const TransformState& transform);

Estimate estimate_divergence(const ObjectiveSpec& objective, const TestFunction& model, std::span<const double> params,
                             const TransformState& transform, const SampleMatrix& xq, const SampleMatrix& xp);

// Called after every recorded evaluation; returning false stops training.
using TraceCallback = std::function<bool(const TracePoint&)>;

// Minibatch Adam ascent over (params, active transform scalars). Q- and
// P-minibatches come from the Q/P sampling streams of config.seed; the
// evaluation pool (eval_samples per side) is drawn once from the evaluation
// streams of eval_source. Throws DivergedError after two consecutive NaN
// evaluations and DomainError when the model violates the objective's sign
// requirement.
RunRecord train(const ObjectiveSpec& objective, const TestFunction& model, const PairSource& train_source,
                const PairSource& eval_source, const TrainConfig& config,
                const std::optional<TransformState>& transform = std::nullopt, const TraceCallback& callback = {},
                std::optional<ParamVector> initial_params = std::nullopt);

// 64-bit FNV-1a of the text, as 16 hex digits.
std::string digest_hex(std::string_view text);

// step,objective_eval,eta,nu,beta,wall_ms
inline constexpr std::string_view kTraceCsvHeader = "step,objective_eval,eta,nu,beta,wall_ms";
void write_trace_csv(const std::filesystem::path& path, const RunRecord& record);

}  // namespace divgauge
