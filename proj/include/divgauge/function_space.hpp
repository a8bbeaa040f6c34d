#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "divgauge/divergence.hpp"
#include "divgauge/rng.hpp"
#include "divgauge/samples.hpp"

namespace divgauge {

using ParamVector = std::vector<double>;

// Fully connected ReLU network R^d -> R.
struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden;

  std::size_t param_count() const;
};

// Per layer: weights (out x in, row-major) followed by biases (out).
struct LayerSlice {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerSlice> layer_layout(const MlpSpec& spec);

// Map applied to the network output g: identity, exp(g) (positive test
// functions) or -exp(g) (negative test functions).
enum class OutputTransform { kIdentity, kExp, kNegExp };

enum class Execution { kSerial, kParallel };

class TestFunction {
 public:
  virtual ~TestFunction() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t param_count() const = 0;
  virtual ParamVector initial_params(Stream& stream) const = 0;
  virtual std::string describe() const = 0;
  virtual std::unique_ptr<TestFunction> clone() const = 0;

  virtual void forward_batch(std::span<const double> params, const SampleMatrix& x, std::span<double> out) const = 0;
  // grad += sum_i upstream[i] * d phi(x_i) / d params
  virtual void backward_batch(std::span<const double> params, const SampleMatrix& x,
                              std::span<const double> upstream, std::span<double> grad) const = 0;

  double forward(std::span<const double> params, std::span<const double> x) const;
  ParamVector backward(std::span<const double> params, std::span<const double> x, double upstream) const;
};

class Mlp final : public TestFunction {
 public:
  Mlp(MlpSpec spec, OutputTransform transform = OutputTransform::kIdentity, Execution exec = Execution::kParallel);

  const MlpSpec& spec() const { return spec_; }
  OutputTransform transform() const { return transform_; }
  void set_execution(Execution exec) { exec_ = exec; }

  std::size_t input_dim() const override { return spec_.input_dim; }
  std::size_t param_count() const override { return spec_.param_count(); }
  // He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)); zero biases.
  ParamVector initial_params(Stream& stream) const override;
  std::string describe() const override;
  std::unique_ptr<TestFunction> clone() const override { return std::make_unique<Mlp>(*this); }

  void forward_batch(std::span<const double> params, const SampleMatrix& x, std::span<double> out) const override;
  void backward_batch(std::span<const double> params, const SampleMatrix& x, std::span<const double> upstream,
                      std::span<double> grad) const override;

 private:
  MlpSpec spec_;
  OutputTransform transform_;
  Execution exec_;
  std::vector<LayerSlice> layout_;
};

// Quadratic sufficient statistics of a Gaussian family: x_i, then x_i x_j
// for i <= j.
std::size_t gaussian_statistic_count(std::size_t dim);
void gaussian_statistics(std::span<const double> x, std::span<double> out);

enum class SubmanifoldMode {
  kGeneric,     // phi = f'(exp(kappa . T + beta)); parameters (kappa, beta)
  kKlLinear,    // phi = kappa . T
  kAlphaScale,  // phi = exp((alpha - 1) kappa . T)
};

struct SubmanifoldSpec {
  std::size_t input_dim = 1;
  DivergenceFamily family = DivergenceFamily::kl();
  SubmanifoldMode mode = SubmanifoldMode::kKlLinear;

  std::size_t statistic_count() const { return gaussian_statistic_count(input_dim); }
  std::size_t param_count() const { return statistic_count() + (mode == SubmanifoldMode::kGeneric ? 1 : 0); }
};

class Submanifold final : public TestFunction {
 public:
  explicit Submanifold(SubmanifoldSpec spec);

  const SubmanifoldSpec& spec() const { return spec_; }

  std::size_t input_dim() const override { return spec_.input_dim; }
  std::size_t param_count() const override { return spec_.param_count(); }
  // All zeros: the constant test function.
  ParamVector initial_params(Stream& stream) const override;
  std::string describe() const override;
  std::unique_ptr<TestFunction> clone() const override { return std::make_unique<Submanifold>(*this); }

  void forward_batch(std::span<const double> params, const SampleMatrix& x, std::span<double> out) const override;
  void backward_batch(std::span<const double> params, const SampleMatrix& x, std::span<const double> upstream,
                      std::span<double> grad) const override;

 private:
  // phi and d phi / d s as functions of the linear predictor s.
  void link(double s, double& phi, double& dphi) const;

  SubmanifoldSpec spec_;
};

// Checkpoint: "DGPM", u32 version, u64 count (all little-endian), then the
// parameters as little-endian IEEE-754 doubles.
void save_params(const std::filesystem::path& path, std::span<const double> params);
ParamVector load_params(const std::filesystem::path& path);

}  // namespace divgauge
