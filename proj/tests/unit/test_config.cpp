#include <filesystem>
#include <string>
#include <vector>

#include "divgauge/config.hpp"
#include "divgauge/errors.hpp"
#include "doctest.h"

using namespace divgauge;

namespace {

LoadedConfig load_text(const std::string& text) { return load_experiment(ConfigFile::parse(text)); }

bool has_field(const std::vector<Diagnostic>& diags, const std::string& field) {
  for (const auto& d : diags) {
    if (d.field == field) return true;
  }
  return false;
}

const char* kMinimal = R"(
[experiment]
kind = estimate
[data]
source = gaussian
q_var = 0.5
)";

}  // namespace

TEST_CASE("config syntax: sections, comments, values") {
  const auto f = ConfigFile::parse("# header\n[a]\nx = 1  # trailing\n\n[b]\ny=two words\n");
  REQUIRE(f.find("a.x"));
  CHECK(f.find("a.x")->value == "1");
  CHECK(f.find("a.x")->line == 3);
  CHECK(f.find("b.y")->value == "two words");
  CHECK(f.find("a.y") == nullptr);
}

TEST_CASE("config syntax errors carry line and column") {
  struct Case {
    const char* text;
    int line;
    int column;
  };
  const std::vector<Case> cases{
      {"[a]\nx = 1\ny 2\n", 3, 1},
      {"[a\nx = 1\n", 1, 1},
      {"x = 1\n", 1, 1},
      {"[a]\nx = 1\nx = 2\n", 3, 1},
  };
  for (const auto& c : cases) {
    CAPTURE(c.text);
    try {
      ConfigFile::parse(c.text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == c.line);
      CHECK(e.column() >= c.column);
    }
  }
}

TEST_CASE("minimal config loads with defaults") {
  const auto loaded = load_text(kMinimal);
  CHECK(loaded.diagnostics.empty());
  CHECK(loaded.config.kind == ExperimentKind::kEstimate);
  CHECK(loaded.config.divergence.family == FamilyChoice::kKl);
  REQUIRE(loaded.config.data.q_var.size() == 1);
  CHECK(loaded.config.data.q_var[0] == doctest::Approx(0.5));
}

TEST_CASE("missing kind and unknown keys are reported") {
  const auto loaded = load_text("[data]\nsource = gaussian\nbogus = 1\n");
  CHECK(has_field(loaded.diagnostics, "experiment.kind"));
  CHECK(has_field(loaded.diagnostics, "data.bogus"));
}

TEST_CASE("bad values are reported per field") {
  const auto loaded = load_text(std::string(kMinimal) + "[train]\nsteps = many\nlr = -1\n");
  CHECK(has_field(loaded.diagnostics, "train.steps"));
}

TEST_CASE("renyi family with a chi2 objective names both fields") {
  const auto loaded = load_text(std::string(kMinimal) + "[divergence]\nfamily = renyi\nalpha = 0.5\n"
                                                         "[objective]\nkinds = chi2_shift\n");
  CHECK(has_field(loaded.diagnostics, "objective.kinds, divergence.family"));
}

TEST_CASE("minibatch above the dataset size is rejected") {
  const auto loaded = load_text(std::string(kMinimal) + "[train]\nminibatch = 200\n");
  CHECK(loaded.diagnostics.empty());
  auto text = std::string(kMinimal);
  text.insert(text.find("q_var"), "dataset_size = 100\n");
  const auto bad = load_text(text + "[train]\nminibatch = 200\n");
  CHECK(has_field(bad.diagnostics, "train.minibatch, data.dataset_size"));
}

TEST_CASE("alpha outside the supported range is rejected") {
  const auto loaded = load_text(std::string(kMinimal) + "[divergence]\nfamily = alpha\nalpha = 5\n");
  CHECK(has_field(loaded.diagnostics, "divergence.alpha"));
}

TEST_CASE("mismatched diagonal lengths are rejected") {
  const auto loaded = load_text("[experiment]\nkind = estimate\n[data]\ndim = 3\nq_mean = 0, 1\n");
  CHECK(has_field(loaded.diagnostics, "data.q_mean"));
}

TEST_CASE("curvature and variance checks") {
  const auto cur = load_text("[experiment]\nkind = curvature\n[data]\ndim = 2\nq_var = 0.5\n"
                             "[curvature]\nepsilon = 0.5\n");
  CHECK(has_field(cur.diagnostics, "data.dim"));
  CHECK(has_field(cur.diagnostics, "curvature.epsilon"));
  const auto var = load_text("[experiment]\nkind = variance\n[data]\nq_var = 0.5\n"
                             "[objective]\nkinds = dv\n");
  CHECK(has_field(var.diagnostics, "objective.kinds, experiment.kind"));
}

TEST_CASE("sweep parameters are checked") {
  const auto bad = load_text("[experiment]\nkind = sweep\n[sweep]\nparameter = data.nothing\nvalues = 1\n"
                             "[data]\nsource = mi\n");
  CHECK(has_field(bad.diagnostics, "sweep.parameter"));
  const auto bad_value = load_text("[experiment]\nkind = sweep\n[sweep]\nparameter = data.rho\nvalues = 0.5, 1.5\n"
                                   "[data]\nsource = mi\n");
  CHECK(has_field(bad_value.diagnostics, "data.rho"));
  CHECK(is_sweep_parameter("data.rho"));
  CHECK_FALSE(is_sweep_parameter("data.nothing"));
  ExperimentConfig c;
  apply_sweep_value(c, "data.rho", 0.3);
  CHECK(c.data.rho == doctest::Approx(0.3));
  CHECK_THROWS_AS(apply_sweep_value(c, "data.nothing", 1.0), DomainError);
}

TEST_CASE("relative output paths resolve against the base directory") {
  const auto f = ConfigFile::parse("[experiment]\nkind = estimate\noutput = res\n");
  CHECK(load_experiment(f, "/base").config.output == std::filesystem::path("/base/res"));
  const auto abs = ConfigFile::parse("[experiment]\nkind = estimate\noutput = /abs/res\n");
  CHECK(load_experiment(abs, "/base").config.output == std::filesystem::path("/abs/res"));
}

TEST_CASE("polynomial directions") {
  CHECK(parse_polynomial("x") == std::vector<double>{0.0, 1.0});
  CHECK(parse_polynomial("x^2") == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(parse_polynomial("1+x") == std::vector<double>{1.0, 1.0});
  CHECK(parse_polynomial("0.5 - 2x^3") == std::vector<double>{0.5, 0.0, 0.0, -2.0});
  CHECK(parse_polynomial("-x + x") == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(parse_polynomial(""), DomainError);
  CHECK_THROWS_AS(parse_polynomial("y"), DomainError);
  CHECK_THROWS_AS(parse_polynomial("x^"), DomainError);
}

TEST_CASE("shipped configs validate") {
  const std::filesystem::path dir = std::filesystem::path(DIVGAUGE_SOURCE_DIR) / "configs";
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    ++count;
    CAPTURE(entry.path().string());
    const auto diags = validate_config(entry.path());
    for (const auto& d : diags) MESSAGE(d.field << ": " << d.message);
    CHECK(diags.empty());
  }
  CHECK(count >= 10);
}
