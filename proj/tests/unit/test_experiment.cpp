#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "divgauge/config.hpp"
#include "divgauge/errors.hpp"
#include "divgauge/experiment.hpp"
#include "divgauge/rng.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace divgauge;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("divgauge_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

ExperimentConfig load_ok(const std::string& text) {
  auto loaded = load_experiment(ConfigFile::parse(text));
  for (const auto& d : loaded.diagnostics) MESSAGE(d.field << ": " << d.message);
  REQUIRE(loaded.diagnostics.empty());
  return loaded.config;
}

const char* kSmallEstimate = R"(
[experiment]
kind = estimate
repeats = 2
[objective]
kinds = lt, dv
[model]
hidden = 8
[data]
q_var = 0.5
[train]
steps = 60
eval_every = 20
eval_samples = 500
seed = 4
)";

}  // namespace

TEST_CASE("relative error and objective targets") {
  CHECK(relative_error(1.1, 1.0) == doctest::Approx(0.1));
  CHECK(relative_error(0.01, 0.0) == doctest::Approx(0.01 / 1e-6));
  CHECK(objective_target(ObjectiveKind::kChi2Shift, 0.3) == doctest::Approx(0.6));
  CHECK(objective_target(ObjectiveKind::kLt, 0.3) == doctest::Approx(0.3));
}

TEST_CASE("fixed pool source returns leading rows") {
  SampleMatrix q(4, 1), p(4, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    q(i, 0) = static_cast<double>(i);
    p(i, 0) = -static_cast<double>(i);
  }
  FixedPoolSource src(q, p);
  Stream s(1, StreamRole::kAux);
  const auto a = src.draw_q(3, s);
  CHECK(a.rows() == 3);
  CHECK(a(2, 0) == 2.0);
  CHECK(src.draw_p(4, s)(3, 0) == -3.0);
  CHECK(src.pool_size() == 4u);
  CHECK_THROWS_AS(src.draw_q(5, s), DomainError);
}

TEST_CASE("fixed dataset problems hold out an evaluation pool") {
  auto c = load_ok(std::string(kSmallEstimate) + "");
  c.data.dataset_size = 50;
  c.train.minibatch = 20;
  c.train.eval_samples = 30;
  const auto prob = make_problem(c, 9);
  REQUIRE(prob.train->pool_size());
  REQUIRE(prob.eval->pool_size());
  CHECK(*prob.train->pool_size() == 50u);
  CHECK(*prob.eval->pool_size() == 30u);
  Stream s(1, StreamRole::kAux);
  const auto tq = prob.train->draw_q(30, s);
  const auto eq = prob.eval->draw_q(30, s);
  bool differs = false;
  for (std::size_t i = 0; i < 30; ++i) differs = differs || tq(i, 0) != eq(i, 0);
  CHECK(differs);
  REQUIRE(prob.oracle);
  CHECK(*prob.oracle > 0.0);
}

TEST_CASE("problem oracles") {
  auto c = load_ok("[experiment]\nkind = mi\n[divergence]\nfamily = kl\n[data]\nsource = mi\nmi_dim = 3\nrho = 0.5\n");
  REQUIRE(problem_oracle(c));
  CHECK(*problem_oracle(c) == doctest::Approx(-1.5 * std::log(1.0 - 0.25)).epsilon(1e-9));
  auto img = load_ok("[experiment]\nkind = estimate\n[divergence]\nfamily = hellinger\n[data]\nsource = images\n");
  REQUIRE(problem_oracle(img));
  CHECK(*problem_oracle(img) == 0.0);
  img.data.p_max_label = 4;
  CHECK_FALSE(problem_oracle(img));
}

TEST_CASE("run pool visits every index once") {
  std::vector<std::atomic<int>> hits(37);
  run_pool(hits.size(), 3, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("training run writes the documented artifacts") {
  TempDir tmp;
  auto c = load_ok(kSmallEstimate);
  c.output = tmp.path / "out";
  std::ostringstream log;
  const auto outcome = run_experiment(c, log);
  CHECK(outcome.exit_code == kExitOk);
  CHECK(outcome.runs == 4);
  const auto final_lines = read_lines(c.output / "final.csv");
  REQUIRE(final_lines.size() == 5);
  CHECK(final_lines[0] == kFinalCsvHeader);
  CHECK(read_lines(c.output / "aggregate.csv").at(0) == kAggregateCsvHeader);
  CHECK(fs::exists(c.output / "convergence.svg"));
  CHECK(fs::exists(c.output / "runs" / "lt_seed4.csv"));
  CHECK(fs::exists(c.output / "runs" / "dv_seed5.csv"));
  const auto manifest = read_lines(c.output / "MANIFEST");
  REQUIRE(manifest.size() >= 2);
  CHECK(manifest[1] == "status complete");
}

TEST_CASE("results depend on seeds only, not on output directory or worker count") {
  TempDir tmp;
  auto c = load_ok(kSmallEstimate);
  c.output = tmp.path / "a";
  c.workers = 1;
  std::ostringstream log;
  run_experiment(c, log);
  c.output = tmp.path / "b";
  c.workers = 3;
  run_experiment(c, log);
  const auto a = read_lines(tmp.path / "a" / "runs" / "lt_seed5.csv");
  const auto b = read_lines(tmp.path / "b" / "runs" / "lt_seed5.csv");
  REQUIRE(a.size() > 2);
  REQUIRE(a.size() == b.size());
  // Columns up to the wall-clock column must match exactly.
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].substr(0, a[i].rfind(',')) == b[i].substr(0, b[i].rfind(',')));
  }
}

TEST_CASE("curvature and variance artifacts") {
  TempDir tmp;
  auto cur = load_ok("[experiment]\nkind = curvature\n[divergence]\nfamily = hellinger\n[data]\nq_var = 0.5\n");
  cur.output = tmp.path / "cur";
  std::ostringstream log;
  CHECK(run_experiment(cur, log).exit_code == kExitOk);
  const auto lines = read_lines(cur.output / "curvature.csv");
  CHECK(lines.at(0) == kCurvatureCsvHeader);
  CHECK(lines.size() == 1 + 3 * 4);

  auto var = load_ok(
      "[experiment]\nkind = variance\n[divergence]\nfamily = hellinger\n[objective]\nkinds = lt, alpha_scale\n"
      "[data]\nq_var = 0.5\n[variance]\nn = 100\nrepeats = 20\n");
  var.output = tmp.path / "var";
  CHECK(run_experiment(var, log).exit_code == kExitOk);
  const auto v = read_lines(var.output / "variance_alpha_scale.csv");
  CHECK(v.at(0) == kVarianceCsvHeader);
  CHECK(v.size() == 2);
}

TEST_CASE("config runner exit codes") {
  TempDir tmp;
  std::ostringstream err;
  CHECK(run_config_file(write_config(tmp.path, "syntax.cfg", "[experiment\n"), err) == kExitInvalid);
  CHECK(err.str().find(":1:") != std::string::npos);
  CHECK(run_config_file(tmp.path / "missing.cfg", err) == kExitInvalid);
  CHECK(run_config_file(write_config(tmp.path, "bad.cfg", "[experiment]\nkind = estimate\n[train]\nsteps = 0\n"),
                        err) == kExitInvalid);
  const auto diverging = write_config(tmp.path, "div.cfg",
                                      "[experiment]\nkind = estimate\n[objective]\nkinds = dv\n[data]\nq_mean = 8\n"
                                      "q_var = 0.01\n[train]\nsteps = 40\nlr = 1e300\neval_every = 10\n");
  CHECK(run_config_file(diverging, err, tmp.path / "div") == kExitDiverged);
  const auto final_lines = read_lines(tmp.path / "div" / "final.csv");
  REQUIRE(final_lines.size() == 2);
  CHECK(final_lines[1].find(",diverged,") != std::string::npos);
  const auto ok = write_config(tmp.path, "ok.cfg", kSmallEstimate);
  CHECK(run_config_file(ok, err, tmp.path / "ok") == kExitOk);
}
