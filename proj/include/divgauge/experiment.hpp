#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>

#include "divgauge/config.hpp"
#include "divgauge/data.hpp"
#include "divgauge/function_space.hpp"

namespace divgauge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitDiverged = 3;

// Digit images: MNIST when configured (or auto with DIVGAUGE_DATA_DIR
// holding the files), the glyph surrogate otherwise. Draws apply the
// configured random translation.
class ImageSampler {
 public:
  explicit ImageSampler(const DataConfig& data);
  bool uses_mnist() const { return pool_.has_value(); }
  std::size_t dim() const;
  SampleMatrix draw(std::size_t n, int max_label, Stream& stream) const;
  ImageBatch draw_batch(std::size_t n, int max_label, Stream& stream) const;
  // Draw without translation, as an image batch.
  ImageBatch draw_images(std::size_t n, int max_label, Stream& stream) const;

 private:
  double sigma_;
  std::optional<GlyphSurrogate> glyphs_;
  std::optional<ImageBatch> pool_;
};

// A fixed pool exposed as a source: draws return the leading rows
// unchanged (no resampling); DomainError when more rows are requested.
class FixedPoolSource final : public PairSource {
 public:
  FixedPoolSource(SampleMatrix q, SampleMatrix p);
  std::size_t dim() const override { return q_.cols(); }
  SampleMatrix draw_q(std::size_t n, Stream& stream) const override;
  SampleMatrix draw_p(std::size_t n, Stream& stream) const override;
  std::optional<std::size_t> pool_size() const override { return std::min(q_.rows(), p_.rows()); }

 private:
  SampleMatrix q_;
  SampleMatrix p_;
};

struct Problem {
  std::shared_ptr<const PairSource> train;
  std::shared_ptr<const PairSource> eval;
  // Divergence of the configured spec between the two laws, when known.
  std::optional<double> oracle;
};

// Sources for estimate and mi configs. With data.dataset_size > 0 the
// training pool and a held-out evaluation pool of train.eval_samples rows
// per side are drawn from streams of `seed`.
Problem make_problem(const ExperimentConfig& config, std::uint64_t seed,
                     std::shared_ptr<const ImageSampler> images = nullptr);
std::optional<double> problem_oracle(const ExperimentConfig& config);

std::unique_ptr<TestFunction> make_model(const ExperimentConfig& config, ObjectiveKind kind, std::size_t input_dim);

// Value the objective converges to: the chi2 objectives target
// chi^2 = 2 D_{f_2}; every other objective targets the configured
// divergence itself.
double objective_target(ObjectiveKind kind, double oracle);
// |estimate - oracle| / max(oracle, 1e-6)
double relative_error(double estimate, double oracle);

// Sources of the consistency checks: Q (labels <= q_max_label) against P
// (labels <= p_max_label); with the translation kernel appended
// ([x | kappa(x)]); and `factors` independent copies concatenated.
struct ConsistencySources {
  std::shared_ptr<const PairSource> base;
  std::shared_ptr<const PairSource> kernel;
  std::shared_ptr<const PairSource> product;
};
ConsistencySources make_consistency_sources(const ExperimentConfig& config,
                                            std::shared_ptr<const ImageSampler> images);

// Runs f(0..n-1) on a pool of `workers` threads (0 = hardware
// concurrency). f must not throw.
void run_pool(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f);

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  std::size_t failed = 0;
};

// Executes a validated config and writes its artifacts under
// config.output; progress lines go to log.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

// Parse, validate, run. Diagnostics and errors go to err; returns the exit
// code. output_override replaces experiment.output when set.
int run_config_file(const std::filesystem::path& path, std::ostream& err,
                    const std::optional<std::filesystem::path>& output_override = std::nullopt);

// Column headers of the experiment CSVs.
inline constexpr const char* kAggregateCsvHeader =
    "group,objective,step,runs,median_estimate,mean_estimate,oracle,median_rel_error,mean_rel_error,"
    "rel_error_of_mean";
inline constexpr const char* kFinalCsvHeader =
    "group,objective,seed,status,final_estimate,std_error,oracle,rel_error,skipped_steps,wall_seconds";
inline constexpr const char* kCurvatureCsvHeader = "direction,objective,numeric,closed_form,rel_err";
inline constexpr const char* kVarianceCsvHeader = "n,formula,mc,se";
inline constexpr const char* kConsistencyCsvHeader =
    "objective,seed,base,with_kernel,joint,data_processing_ratio,product_ratio";
inline constexpr const char* kConsistencySummaryCsvHeader = "objective,check,median_ratio,target,runs";

}  // namespace divgauge
