#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divgauge/objectives.hpp"
#include "divgauge/oracle.hpp"
#include "divgauge/trainer.hpp"

namespace divgauge {

// Flat key-value text with section headers:
//   # comment
//   [section]
//   key = value
// Keys are addressed as "section.key". Syntax errors raise ParseError with
// the 1-based line and column of the offending character.
struct ConfigEntry {
  std::string value;
  int line = 0;
  int column = 0;
};

class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text);
  // IoError when the file cannot be read.
  static ConfigFile load(const std::filesystem::path& path);

  const ConfigEntry* find(const std::string& key) const;
  const std::map<std::string, ConfigEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, ConfigEntry> entries_;
};

enum class ExperimentKind { kEstimate, kMi, kCurvature, kVariance, kConsistency, kSweep };
std::string experiment_kind_name(ExperimentKind kind);

enum class FamilyChoice { kKl, kAlpha, kChi2, kHellinger, kRenyi };

struct DivergenceConfig {
  FamilyChoice family = FamilyChoice::kKl;
  double alpha = 0.5;

  // f-divergence family; DomainError for renyi.
  DivergenceFamily f_family() const;
  DivergenceSpec spec() const;
  std::string name() const;
};

enum class ModelType { kMlp, kSubmanifold };
enum class OutputChoice { kAuto, kIdentity, kExp, kNegExp };
enum class SubmanifoldChoice { kAuto, kGeneric, kKlLinear, kAlphaScale };

struct ModelConfig {
  ModelType type = ModelType::kMlp;
  std::vector<std::size_t> hidden{64};
  OutputChoice output = OutputChoice::kAuto;
  SubmanifoldChoice mode = SubmanifoldChoice::kAuto;
};

enum class DataSource { kGaussian, kMi, kImages };
enum class ImageChoice { kAuto, kMnist, kGlyphs };

struct DataConfig {
  DataSource source = DataSource::kGaussian;
  // gaussian: diagonal Gaussians; a single entry broadcasts to data.dim.
  std::size_t dim = 1;
  std::vector<double> q_mean{0.0};
  std::vector<double> q_var{1.0};
  std::vector<double> p_mean{0.0};
  std::vector<double> p_var{1.0};
  // mi
  std::size_t mi_dim = 20;
  double rho = 0.5;
  std::size_t embed_dim = 0;  // 0 = no embedding
  std::uint64_t embed_seed = 0;
  // images
  ImageChoice images = ImageChoice::kAuto;
  double translate_sigma = 0.0;
  int q_max_label = 9;
  int p_max_label = 9;
  std::uint64_t glyph_seed = 0;
  // Fixed training pool per side; 0 draws fresh samples every step.
  std::size_t dataset_size = 0;
};

struct CurvatureConfig {
  std::vector<std::string> directions{"x", "x^2", "1+x"};
  double epsilon = 1e-2;
};

struct VarianceConfig {
  std::vector<std::size_t> n{10000, 100000};
  std::size_t repeats = 200;
};

struct ConsistencyConfig {
  double kernel_sigma = 1.0;
  std::size_t factors = 2;
};

struct SweepConfig {
  ExperimentKind base = ExperimentKind::kMi;
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kEstimate;
  std::string name = "experiment";
  std::filesystem::path output = "out";
  std::size_t repeats = 1;
  std::size_t workers = 0;  // 0 = available parallelism

  DivergenceConfig divergence;
  std::vector<ObjectiveKind> objectives{ObjectiveKind::kLt};
  ModelConfig model;
  DataConfig data;
  TrainConfig train;
  CurvatureConfig curvature;
  VarianceConfig variance;
  ConsistencyConfig consistency;
  SweepConfig sweep;

  ObjectiveSpec objective_spec(ObjectiveKind kind) const;
};

// One problem found while reading or checking a config; field is the
// dotted key path (several paths joined by ", " when a combination is at
// fault).
struct Diagnostic {
  std::string field;
  std::string message;
};

struct LoadedConfig {
  ExperimentConfig config;
  std::vector<Diagnostic> diagnostics;
};

// Typed conversion plus cross-field checks. Relative output paths resolve
// against base_dir.
LoadedConfig load_experiment(const ConfigFile& file, const std::filesystem::path& base_dir = {});
// Parses and checks a config file; empty result means runnable.
std::vector<Diagnostic> validate_config(const std::filesystem::path& path);
// Cross-field checks on an already typed config.
std::vector<Diagnostic> check_experiment(const ExperimentConfig& config);

// Applies a sweep value to the named parameter (DomainError on unknown names).
void apply_sweep_value(ExperimentConfig& config, const std::string& parameter, double value);
bool is_sweep_parameter(const std::string& parameter);

// MNIST location from DIVGAUGE_DATA_DIR when both training IDX files exist.
struct MnistFiles {
  std::filesystem::path images;
  std::filesystem::path labels;
};
std::optional<MnistFiles> find_mnist();

// Directions for curvature experiments: polynomials in x such as "x",
// "x^2", "1+x", "0.5 - 2x^3". DomainError on malformed text.
std::vector<double> parse_polynomial(const std::string& text);

}  // namespace divgauge
