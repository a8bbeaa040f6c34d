#include "divgauge/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "divgauge/errors.hpp"
#include "divgauge/stats.hpp"

namespace divgauge {

void TrainConfig::validate() const {
  if (steps == 0) throw DomainError("steps must be positive");
  if (minibatch < 2) throw DomainError("minibatch must be at least 2");
  if (!(lr > 0.0)) throw DomainError("learning rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw DomainError("Adam decay rates must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw DomainError("Adam epsilon must be positive");
  if (eval_every == 0) throw DomainError("eval_every must be positive");
  if (eval_samples < 2) throw DomainError("eval_samples must be at least 2");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.size() != params.size() || state.v.size() != params.size() || grads.size() != params.size()) {
    throw DomainError("Adam buffers do not match the parameter vector");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grads[k];
    state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grads[k] * grads[k];
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    params[k] += lr * mhat / (std::sqrt(vhat) + eps);
  }
}

namespace {

bool has_nan(std::span<const double> v) {
  for (double x : v) {
    if (std::isnan(x)) return true;
  }
  return false;
}

}  // namespace

ObjectiveGradient objective_gradient(const ObjectiveSpec& objective, const TestFunction& model,
                                     std::span<const double> params, const TransformState& transform,
                                     const SampleMatrix& xq, const SampleMatrix& xp) {
  BatchEval batch;
  batch.phi_q.resize(xq.rows());
  batch.phi_p.resize(xp.rows());
  model.forward_batch(params, xq, batch.phi_q);
  model.forward_batch(params, xp, batch.phi_p);
  ObjectiveGradient out;
  if (has_nan(batch.phi_q) || has_nan(batch.phi_p)) {
    out.value.value = kNaN;
    out.grad_params.assign(params.size(), 0.0);
    return out;
  }
  out.value = evaluate(objective, batch, transform);
  out.grad_params.assign(params.size(), 0.0);
  if (std::isfinite(out.value.value)) {
    model.backward_batch(params, xq, out.value.grad_phi_q, out.grad_params);
    model.backward_batch(params, xp, out.value.grad_phi_p, out.grad_params);
  }
  return out;
}

namespace {

double var_of(std::span<const double> v) { return weighted_variance(v, {}); }

std::vector<double> mapped(std::span<const double> v, const std::function<double(double)>& f) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return out;
}

// Delta-method variance of the objective, or NaN when no formula applies.
double delta_variance(const ObjectiveSpec& objective, const BatchEval& batch, const TransformState& transform) {
  const auto nq = static_cast<double>(batch.n_q());
  const auto np = static_cast<double>(batch.n_p());
  const auto& fam = objective.family;
  switch (objective.kind) {
    case ObjectiveKind::kLt: {
      const double eta = transform.eta, nu = transform.nu;
      const auto fs = mapped(batch.phi_p, [&](double v) { return fam.f_star(eta * v - nu); });
      return eta * eta * var_of(batch.phi_q) / nq + var_of(fs) / np;
    }
    case ObjectiveKind::kDv:
    case ObjectiveKind::kImprovedDv: {
      const double eta = objective.kind == ObjectiveKind::kDv ? 1.0 : transform.eta;
      double mx = -kInf;
      for (double v : batch.phi_p) mx = std::max(mx, eta * v);
      const auto e = mapped(batch.phi_p, [&](double v) { return std::exp(eta * v - mx); });
      const double m = weighted_mean(e, {});
      return eta * eta * var_of(batch.phi_q) / nq + var_of(e) / (m * m * np);
    }
    case ObjectiveKind::kAlphaScale:
    case ObjectiveKind::kAlphaScalePower: {
      const double a = fam.alpha();
      const double b = objective.kind == ObjectiveKind::kAlphaScale ? 1.0 : transform.beta;
      const auto pq = mapped(batch.phi_q, [&](double v) { return std::pow(v, b); });
      const auto pp = mapped(batch.phi_p, [&](double v) { return std::pow(v, b * a / (a - 1.0)); });
      const double ma = weighted_mean(pq, {});
      const double mb = weighted_mean(pp, {});
      const double g = std::pow(ma, a) * std::pow(mb, 1.0 - a);
      return g * g / (ma * ma * (a - 1.0) * (a - 1.0)) * var_of(pq) / nq + g * g / (mb * mb * a * a) * var_of(pp) / np;
    }
    case ObjectiveKind::kRenyi: {
      const double a = objective.renyi_alpha;
      double mq = -kInf, mp = -kInf;
      for (double v : batch.phi_q) mq = std::max(mq, (a - 1.0) * v);
      for (double v : batch.phi_p) mp = std::max(mp, a * v);
      const auto eq = mapped(batch.phi_q, [&](double v) { return std::exp((a - 1.0) * v - mq); });
      const auto ep = mapped(batch.phi_p, [&](double v) { return std::exp(a * v - mp); });
      const double m1 = weighted_mean(eq, {}), m2 = weighted_mean(ep, {});
      return var_of(eq) / ((a - 1.0) * (a - 1.0) * m1 * m1 * nq) + var_of(ep) / (a * a * m2 * m2 * np);
    }
    default:
      return kNaN;
  }
}

double batch_split_variance(const ObjectiveSpec& objective, const BatchEval& batch, const TransformState& transform) {
  constexpr std::size_t kSplits = 10;
  const std::size_t bq = batch.n_q() / kSplits;
  const std::size_t bp = batch.n_p() / kSplits;
  if (bq < 2 || bp < 2) return kNaN;
  std::vector<double> values;
  for (std::size_t k = 0; k < kSplits; ++k) {
    BatchEval part;
    part.phi_q.assign(batch.phi_q.begin() + static_cast<std::ptrdiff_t>(k * bq),
                      batch.phi_q.begin() + static_cast<std::ptrdiff_t>((k + 1) * bq));
    part.phi_p.assign(batch.phi_p.begin() + static_cast<std::ptrdiff_t>(k * bp),
                      batch.phi_p.begin() + static_cast<std::ptrdiff_t>((k + 1) * bp));
    const double v = evaluate(objective, part, transform).value;
    if (std::isfinite(v)) values.push_back(v);
  }
  if (values.size() < 2) return kNaN;
  // Each part has 1/kSplits of the data, so its variance is kSplits times
  // that of the full-pool estimate.
  return sample_variance(values) / static_cast<double>(kSplits);
}

}  // namespace

Estimate estimate_from_values(const ObjectiveSpec& objective, const BatchEval& batch, const TransformState& transform) {
  Estimate out;
  out.value = evaluate(objective, batch, transform).value;
  if (!batch.weights_q.empty() || !batch.weights_p.empty()) return out;
  double var = delta_variance(objective, batch, transform);
  if (!std::isfinite(var)) var = batch_split_variance(objective, batch, transform);
  out.std_error = std::sqrt(std::max(var, 0.0));
  return out;
}

Estimate estimate_divergence(const ObjectiveSpec& objective, const TestFunction& model, std::span<const double> params,
                             const TransformState& transform, const SampleMatrix& xq, const SampleMatrix& xp) {
  BatchEval batch;
  batch.phi_q.resize(xq.rows());
  batch.phi_p.resize(xp.rows());
  model.forward_batch(params, xq, batch.phi_q);
  model.forward_batch(params, xp, batch.phi_p);
  if (has_nan(batch.phi_q) || has_nan(batch.phi_p)) return {kNaN, kNaN};
  return estimate_from_values(objective, batch, transform);
}

namespace {

void check_constraint(OutputConstraint c, std::span<const double> values) {
  for (double v : values) {
    if (c == OutputConstraint::kPositive && !(v > 0.0)) {
      throw DomainError("objective needs a positive test function; use a positive output transform");
    }
    if (c == OutputConstraint::kNegative && !(v < 0.0)) {
      throw DomainError("objective needs a negative test function; use a negative output transform");
    }
  }
}

// Trainable transform scalars in unconstrained coordinates: log eta,
// nu, log beta (only the active ones).
struct TransformParams {
  std::vector<double> values;
  bool eta = false, nu = false, beta = false;

  static TransformParams from(const TransformState& t) {
    TransformParams p;
    p.eta = t.train_eta;
    p.nu = t.train_nu;
    p.beta = t.train_beta;
    if (p.eta) p.values.push_back(std::log(t.eta));
    if (p.nu) p.values.push_back(t.nu);
    if (p.beta) p.values.push_back(std::log(t.beta));
    return p;
  }
  void write(TransformState& t) const {
    std::size_t k = 0;
    if (eta) t.eta = std::exp(values[k++]);
    if (nu) t.nu = values[k++];
    if (beta) t.beta = std::exp(values[k++]);
  }
  std::vector<double> grad(const TransformState& t, const TransformGrad& g) const {
    std::vector<double> out;
    if (eta) out.push_back(g.eta * t.eta);
    if (nu) out.push_back(g.nu);
    if (beta) out.push_back(g.beta * t.beta);
    return out;
  }
};

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

RunRecord train(const ObjectiveSpec& objective, const TestFunction& model, const PairSource& train_source,
                const PairSource& eval_source, const TrainConfig& config, const std::optional<TransformState>& transform,
                const TraceCallback& callback, std::optional<ParamVector> initial_params) {
  objective.validate();
  config.validate();
  if (train_source.dim() != model.input_dim() || eval_source.dim() != model.input_dim()) {
    throw DomainError("sample dimension does not match the model input");
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  Stream init_stream(config.seed, StreamRole::kInit);
  Stream q_stream(config.seed, StreamRole::kQSampling);
  Stream p_stream(config.seed, StreamRole::kPSampling);
  Stream eq_stream(config.seed, StreamRole::kEvalQ);
  Stream ep_stream(config.seed, StreamRole::kEvalP);

  RunRecord record;
  record.seed = config.seed;
  record.params = initial_params ? std::move(*initial_params) : model.initial_params(init_stream);
  if (record.params.size() != model.param_count()) throw DomainError("initial parameters have the wrong length");
  TransformState state = transform.value_or(objective.default_transform());
  auto tparams = TransformParams::from(state);

  const SampleMatrix eval_q = eval_source.draw_q(config.eval_samples, eq_stream);
  const SampleMatrix eval_p = eval_source.draw_p(config.eval_samples, ep_stream);
  const auto constraint = objective.output_constraint();

  AdamState adam(record.params.size());
  AdamState adam_t(tparams.values.size());
  int nan_evals = 0;

  auto record_eval = [&](std::size_t step) {
    const auto est = estimate_divergence(objective, model, record.params, state, eval_q, eval_p);
    TracePoint tp{step, est.value, state.eta, state.nu, state.beta, elapsed_ms()};
    record.trace.push_back(tp);
    record.final_estimate = est.value;
    record.final_std_error = est.std_error;
    if (std::isnan(est.value)) {
      if (++nan_evals >= 2) throw DivergedError("evaluation objective is NaN at step " + std::to_string(step));
    } else {
      nan_evals = 0;
    }
    return callback ? callback(tp) : true;
  };

  {
    BatchEval probe;
    probe.phi_q.resize(eval_q.rows());
    model.forward_batch(record.params, eval_q, probe.phi_q);
    check_constraint(constraint, probe.phi_q);
  }
  bool keep_going = record_eval(0);

  for (std::size_t step = 1; step <= config.steps && keep_going; ++step) {
    const SampleMatrix xq = train_source.draw_q(config.minibatch, q_stream);
    const SampleMatrix xp = train_source.draw_p(config.minibatch, p_stream);
    auto og = objective_gradient(objective, model, record.params, state, xq, xp);
    const double v = og.value.value;
    if (!std::isfinite(v) || !all_finite(og.grad_params)) {
      ++record.skipped_steps;
    } else {
      const auto tgrad = tparams.grad(state, og.value.grad_transform);
      adam_step(adam, record.params, og.grad_params, config.lr, config.adam_beta1, config.adam_beta2,
                config.adam_eps);
      if (!tparams.values.empty() && all_finite(tgrad)) {
        adam_step(adam_t, tparams.values, tgrad, config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
        tparams.write(state);
        if (config.transform_substeps > 0) {
          BatchEval batch;
          batch.phi_q.resize(xq.rows());
          batch.phi_p.resize(xp.rows());
          model.forward_batch(record.params, xq, batch.phi_q);
          model.forward_batch(record.params, xp, batch.phi_p);
          for (std::size_t k = 0; k < config.transform_substeps; ++k) {
            const auto inner = evaluate(objective, batch, state);
            if (!std::isfinite(inner.value)) break;
            const auto g = tparams.grad(state, inner.grad_transform);
            if (!all_finite(g)) break;
            adam_step(adam_t, tparams.values, g, config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
            tparams.write(state);
          }
        }
      }
    }
    if (step % config.eval_every == 0 || step == config.steps) keep_going = record_eval(step);
  }
  record.transform_final = state;
  record.wall_seconds = elapsed_ms() / 1000.0;
  return record;
}

std::string digest_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_trace_csv(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << kTraceCsvHeader << '\n';
  char line[256];
  for (const auto& tp : record.trace) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.3f\n", tp.step, tp.objective_eval, tp.eta, tp.nu,
                  tp.beta, tp.wall_ms);
    os << line;
  }
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace divgauge
