#include "divgauge/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "divgauge/analysis.hpp"
#include "divgauge/errors.hpp"
#include "divgauge/oracle.hpp"
#include "divgauge/report.hpp"
#include "divgauge/stats.hpp"

namespace divgauge {

namespace fs = std::filesystem;

ImageSampler::ImageSampler(const DataConfig& data) : sigma_(data.translate_sigma) {
  const auto mnist = data.images == ImageChoice::kGlyphs ? std::nullopt : find_mnist();
  if (data.images == ImageChoice::kMnist && !mnist) {
    throw IoError("mnist requested but DIVGAUGE_DATA_DIR does not hold the training IDX files");
  }
  if (mnist) {
    pool_ = mnist_load(mnist->images, mnist->labels);
  } else {
    GlyphSpec spec;
    spec.seed = data.glyph_seed;
    glyphs_.emplace(spec);
  }
}

std::size_t ImageSampler::dim() const {
  if (pool_) return pool_->height * pool_->width;
  return glyphs_->spec().side * glyphs_->spec().side;
}

ImageBatch ImageSampler::draw_images(std::size_t n, int max_label, Stream& stream) const {
  if (pool_) return divgauge::draw_images(*pool_, n, max_label, stream);
  return glyphs_->sample(n, max_label, stream);
}

ImageBatch ImageSampler::draw_batch(std::size_t n, int max_label, Stream& stream) const {
  auto batch = draw_images(n, max_label, stream);
  if (sigma_ > 0.0) batch = random_translate(batch, sigma_, stream);
  return batch;
}

SampleMatrix ImageSampler::draw(std::size_t n, int max_label, Stream& stream) const {
  return std::move(draw_batch(n, max_label, stream).pixels);
}

FixedPoolSource::FixedPoolSource(SampleMatrix q, SampleMatrix p) : q_(std::move(q)), p_(std::move(p)) {
  if (q_.cols() != p_.cols()) throw DomainError("Q and P pools differ in dimension");
}

namespace {

SampleMatrix leading_rows(const SampleMatrix& pool, std::size_t n) {
  if (n > pool.rows()) throw DomainError("requested more rows than the fixed pool holds");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return pool.gather(idx);
}

std::vector<double> broadcast(const std::vector<double>& v, std::size_t dim) {
  return v.size() == 1 ? std::vector<double>(dim, v[0]) : v;
}

GaussianSpec diagonal_gaussian(const std::vector<double>& mean, const std::vector<double>& var, std::size_t dim) {
  const auto m = broadcast(mean, dim);
  const auto v = broadcast(var, dim);
  return GaussianSpec::diagonal(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(dim)),
                                Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(dim)));
}

MiPairSampler mi_sampler(const DataConfig& d) {
  MiPairSampler s;
  s.d = d.mi_dim;
  s.rho = d.rho;
  if (d.embed_dim > 0) s.embed = EmbeddingSpec{d.embed_dim, d.embed_seed};
  return s;
}

std::pair<GaussianSpec, GaussianSpec> mi_laws(const DataConfig& d) {
  const auto n = static_cast<Eigen::Index>(2 * d.mi_dim);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    cov(i, n / 2 + i) = d.rho;
    cov(n / 2 + i, i) = d.rho;
  }
  return {GaussianSpec(Eigen::VectorXd::Zero(n), cov), GaussianSpec::isotropic(2 * d.mi_dim, 0.0, 1.0)};
}

std::shared_ptr<const PairSource> image_source(const DataConfig& d, std::shared_ptr<const ImageSampler> images) {
  const int q_label = d.q_max_label, p_label = d.p_max_label;
  return std::make_shared<FunctionPairSource>(
      images->dim(), [images, q_label](std::size_t n, Stream& s) { return images->draw(n, q_label, s); },
      [images, p_label](std::size_t n, Stream& s) { return images->draw(n, p_label, s); });
}

}  // namespace

SampleMatrix FixedPoolSource::draw_q(std::size_t n, Stream&) const { return leading_rows(q_, n); }
SampleMatrix FixedPoolSource::draw_p(std::size_t n, Stream&) const { return leading_rows(p_, n); }

std::optional<double> problem_oracle(const ExperimentConfig& c) {
  const auto& d = c.data;
  switch (d.source) {
    case DataSource::kGaussian: {
      const auto q = diagonal_gaussian(d.q_mean, d.q_var, d.dim);
      const auto p = diagonal_gaussian(d.p_mean, d.p_var, d.dim);
      return oracle_divergence(c.divergence.spec(), q, p).value;
    }
    case DataSource::kMi: {
      const auto [q, p] = mi_laws(d);
      return gaussian_closed_form(c.divergence.spec(), q, p);
    }
    case DataSource::kImages:
      if (d.q_max_label == d.p_max_label) return 0.0;
      return std::nullopt;
  }
  return std::nullopt;
}

Problem make_problem(const ExperimentConfig& c, std::uint64_t seed, std::shared_ptr<const ImageSampler> images) {
  const auto& d = c.data;
  Problem out;
  switch (d.source) {
    case DataSource::kGaussian:
      out.train = std::make_shared<GaussianPairSource>(diagonal_gaussian(d.q_mean, d.q_var, d.dim),
                                                       diagonal_gaussian(d.p_mean, d.p_var, d.dim));
      break;
    case DataSource::kMi:
      out.train = std::make_shared<MiPairSource>(mi_sampler(d));
      break;
    case DataSource::kImages:
      if (!images) images = std::make_shared<ImageSampler>(d);
      out.train = image_source(d, images);
      break;
  }
  out.eval = out.train;
  if (d.dataset_size > 0) {
    const auto& gen = *out.train;
    Stream tq(seed, StreamRole::kAux, 11), tp(seed, StreamRole::kAux, 12);
    Stream eq(seed, StreamRole::kAux, 13), ep(seed, StreamRole::kAux, 14);
    auto train_q = gen.draw_q(d.dataset_size, tq);
    auto train_p = gen.draw_p(d.dataset_size, tp);
    auto eval_q = gen.draw_q(c.train.eval_samples, eq);
    auto eval_p = gen.draw_p(c.train.eval_samples, ep);
    out.train = std::make_shared<DatasetPairSource>(std::move(train_q), std::move(train_p));
    out.eval = std::make_shared<FixedPoolSource>(std::move(eval_q), std::move(eval_p));
  }
  out.oracle = problem_oracle(c);
  return out;
}

std::unique_ptr<TestFunction> make_model(const ExperimentConfig& c, ObjectiveKind kind, std::size_t input_dim) {
  const auto spec = c.objective_spec(kind);
  const auto need = spec.output_constraint();
  if (c.model.type == ModelType::kMlp) {
    OutputTransform t = OutputTransform::kIdentity;
    switch (c.model.output) {
      case OutputChoice::kAuto:
        t = need == OutputConstraint::kPositive   ? OutputTransform::kExp
            : need == OutputConstraint::kNegative ? OutputTransform::kNegExp
                                                  : OutputTransform::kIdentity;
        break;
      case OutputChoice::kIdentity:
        t = OutputTransform::kIdentity;
        break;
      case OutputChoice::kExp:
        t = OutputTransform::kExp;
        break;
      case OutputChoice::kNegExp:
        t = OutputTransform::kNegExp;
        break;
    }
    return std::make_unique<Mlp>(MlpSpec{input_dim, c.model.hidden}, t);
  }
  SubmanifoldMode mode = SubmanifoldMode::kGeneric;
  switch (c.model.mode) {
    case SubmanifoldChoice::kAuto:
      switch (kind) {
        case ObjectiveKind::kAlphaScale:
        case ObjectiveKind::kAlphaScalePower:
          mode = SubmanifoldMode::kAlphaScale;
          break;
        case ObjectiveKind::kLt:
          mode = SubmanifoldMode::kGeneric;
          break;
        default:
          mode = SubmanifoldMode::kKlLinear;
      }
      break;
    case SubmanifoldChoice::kGeneric:
      mode = SubmanifoldMode::kGeneric;
      break;
    case SubmanifoldChoice::kKlLinear:
      mode = SubmanifoldMode::kKlLinear;
      break;
    case SubmanifoldChoice::kAlphaScale:
      mode = SubmanifoldMode::kAlphaScale;
      break;
  }
  return std::make_unique<Submanifold>(SubmanifoldSpec{input_dim, spec.family, mode});
}

double objective_target(ObjectiveKind kind, double oracle) {
  if (kind == ObjectiveKind::kChi2Hcr || kind == ObjectiveKind::kChi2Shift) return 2.0 * oracle;
  return oracle;
}

double relative_error(double estimate, double oracle) {
  return std::abs(estimate - oracle) / std::max(oracle, 1e-6);
}

ConsistencySources make_consistency_sources(const ExperimentConfig& c, std::shared_ptr<const ImageSampler> images) {
  if (!images) images = std::make_shared<ImageSampler>(c.data);
  const int ql = c.data.q_max_label, pl = c.data.p_max_label;
  const double sigma = c.consistency.kernel_sigma;
  const std::size_t k = c.consistency.factors;
  const std::size_t dim = images->dim();
  ConsistencySources out;
  out.base = image_source(c.data, images);
  auto with_kernel = [images, sigma](int label) {
    return [images, sigma, label](std::size_t n, Stream& s) {
      const auto x = images->draw_batch(n, label, s);
      const auto moved = random_translate(x, sigma, s);
      return SampleMatrix::hconcat(x.pixels, moved.pixels);
    };
  };
  out.kernel = std::make_shared<FunctionPairSource>(2 * dim, with_kernel(ql), with_kernel(pl));
  auto copies = [images, k](int label) {
    return [images, k, label](std::size_t n, Stream& s) {
      SampleMatrix x = images->draw(n, label, s);
      for (std::size_t i = 1; i < k; ++i) x = SampleMatrix::hconcat(x, images->draw(n, label, s));
      return x;
    };
  };
  out.product = std::make_shared<FunctionPairSource>(k * dim, copies(ql), copies(pl));
  return out;
}

void run_pool(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&]() {
      // Kernels use a fixed chunking, so the thread count does not change results.
      omp_set_num_threads(1);
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& t : threads) t.join();
}

namespace {

enum class RunStatus { kOk, kDiverged, kFailed };

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kOk:
      return "ok";
    case RunStatus::kDiverged:
      return "diverged";
    case RunStatus::kFailed:
      return "failed";
  }
  return "failed";
}

struct RunResult {
  RunStatus status = RunStatus::kFailed;
  std::string message;
  RunRecord record;
};

struct Group {
  std::string label;  // "all" or "<parameter>=<value>"
  std::string tag;    // file-name prefix
  double sweep_value = std::nan("");
  ExperimentConfig config;
  std::optional<double> oracle;
};

struct TrainTask {
  std::size_t group = 0;
  ObjectiveKind kind = ObjectiveKind::kLt;
  std::size_t repeat = 0;
};

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
  return out;
}

std::string run_file(const std::string& tag, ObjectiveKind kind, std::uint64_t seed) {
  return (tag.empty() ? "" : tag + "_") + objective_name(kind) + "_seed" + std::to_string(seed) + ".csv";
}

RunResult guarded_train(const std::function<RunRecord()>& body) {
  RunResult r;
  try {
    r.record = body();
    r.status = RunStatus::kOk;
  } catch (const DivergedError& e) {
    r.status = RunStatus::kDiverged;
    r.message = e.what();
  } catch (const std::exception& e) {
    r.status = RunStatus::kFailed;
    r.message = e.what();
  }
  return r;
}

void finish_outcome(ExperimentOutcome& out) {
  if (out.runs > 0 && out.diverged == out.runs) {
    out.exit_code = kExitDiverged;
  } else if (out.runs > 0 && out.diverged + out.failed == out.runs) {
    out.exit_code = kExitError;
  } else {
    out.exit_code = kExitOk;
  }
}

ExperimentOutcome run_training(const ExperimentConfig& c, Manifest& manifest, std::ostream& log) {
  std::vector<Group> groups;
  if (c.kind == ExperimentKind::kSweep) {
    const std::string short_name = c.sweep.parameter.substr(c.sweep.parameter.find('.') + 1);
    for (double v : c.sweep.values) {
      Group g;
      g.config = c;
      g.config.kind = c.sweep.base;
      apply_sweep_value(g.config, c.sweep.parameter, v);
      g.label = c.sweep.parameter + "=" + format_number(v);
      g.tag = sanitize(short_name + "_" + format_number(v));
      g.sweep_value = v;
      groups.push_back(std::move(g));
    }
  } else {
    Group g;
    g.config = c;
    g.label = "all";
    groups.push_back(std::move(g));
  }
  for (auto& g : groups) {
    try {
      g.oracle = problem_oracle(g.config);
    } catch (const std::exception& e) {
      log << "oracle unavailable for " << g.label << ": " << e.what() << '\n';
    }
  }
  std::shared_ptr<const ImageSampler> images;
  if (c.data.source == DataSource::kImages) images = std::make_shared<ImageSampler>(c.data);

  std::vector<TrainTask> tasks;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (ObjectiveKind k : c.objectives) {
      for (std::size_t r = 0; r < c.repeats; ++r) tasks.push_back({gi, k, r});
    }
  }
  std::vector<RunResult> results(tasks.size());
  std::mutex log_mutex;
  const fs::path runs_dir = c.output / "runs";
  run_pool(tasks.size(), c.workers, [&](std::size_t i) {
    const auto& task = tasks[i];
    const auto& g = groups[task.group];
    TrainConfig tc = g.config.train;
    tc.seed = g.config.train.seed + task.repeat;
    results[i] = guarded_train([&]() {
      const auto problem = make_problem(g.config, tc.seed, images);
      const auto model = make_model(g.config, task.kind, problem.train->dim());
      return train(g.config.objective_spec(task.kind), *model, *problem.train, *problem.eval, tc);
    });
    if (results[i].status == RunStatus::kOk) {
      try {
        write_trace_csv(runs_dir / run_file(g.tag, task.kind, tc.seed), results[i].record);
      } catch (const std::exception& e) {
        results[i].status = RunStatus::kFailed;
        results[i].message = e.what();
      }
    }
    std::lock_guard lock(log_mutex);
    log << g.label << ' ' << objective_name(task.kind) << " seed " << tc.seed << ": " << status_name(results[i].status);
    if (results[i].status == RunStatus::kOk) {
      log << " estimate " << format_number(results[i].record.final_estimate);
    } else {
      log << " (" << results[i].message << ")";
    }
    log << '\n';
  });

  ExperimentOutcome outcome;
  outcome.runs = tasks.size();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& g = groups[tasks[i].group];
    const auto seed = g.config.train.seed + tasks[i].repeat;
    if (results[i].status == RunStatus::kOk) {
      manifest.add(runs_dir / run_file(g.tag, tasks[i].kind, seed));
    } else {
      if (results[i].status == RunStatus::kDiverged) ++outcome.diverged;
      if (results[i].status == RunStatus::kFailed) ++outcome.failed;
      manifest.note_failure(g.label + " " + objective_name(tasks[i].kind) + " seed " + std::to_string(seed) + ": " +
                            status_name(results[i].status) + ": " + results[i].message);
    }
  }

  const fs::path final_path = c.output / "final.csv";
  {
    CsvWriter w(final_path, kFinalCsvHeader);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const auto& g = groups[tasks[i].group];
      const auto& res = results[i];
      const double target = g.oracle ? objective_target(tasks[i].kind, *g.oracle) : std::nan("");
      const bool ok = res.status == RunStatus::kOk;
      const double est = ok ? res.record.final_estimate : std::nan("");
      w.row({g.label, objective_name(tasks[i].kind), std::to_string(g.config.train.seed + tasks[i].repeat),
             status_name(res.status), format_number(est), ok ? format_number(res.record.final_std_error) : "",
             format_number(target), ok && g.oracle ? format_number(relative_error(est, target)) : "",
             ok ? std::to_string(res.record.skipped_steps) : "", ok ? format_number(res.record.wall_seconds) : ""});
    }
  }
  manifest.add(final_path);

  const fs::path agg_path = c.output / "aggregate.csv";
  CsvWriter agg(agg_path, kAggregateCsvHeader);
  std::map<ObjectiveKind, SvgSeries> sweep_series;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    std::vector<SvgSeries> curves;
    std::optional<double> reference;
    for (ObjectiveKind k : c.objectives) {
      std::vector<const RunRecord*> ok;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].group == gi && tasks[i].kind == k && results[i].status == RunStatus::kOk) {
          ok.push_back(&results[i].record);
        }
      }
      const double target = g.oracle ? objective_target(k, *g.oracle) : std::nan("");
      if (!reference && g.oracle) reference = target;
      SvgSeries curve{objective_name(k), {}, {}};
      if (ok.empty()) continue;
      const std::size_t points = ok.front()->trace.size();
      for (std::size_t p = 0; p < points; ++p) {
        std::vector<double> est, rel;
        for (const auto* rec : ok) {
          if (p >= rec->trace.size()) continue;
          est.push_back(rec->trace[p].objective_eval);
          if (g.oracle) rel.push_back(relative_error(est.back(), target));
        }
        const double med = median(est);
        const double mean = weighted_mean(est, {});
        agg.row({g.label, objective_name(k), std::to_string(ok.front()->trace[p].step), std::to_string(est.size()),
                 format_number(med), format_number(mean), format_number(target),
                 g.oracle ? format_number(median(rel)) : "", g.oracle ? format_number(weighted_mean(rel, {})) : "",
                 g.oracle ? format_number(relative_error(mean, target)) : ""});
        curve.x.push_back(static_cast<double>(ok.front()->trace[p].step));
        curve.y.push_back(med);
      }
      if (!curve.y.empty()) {
        auto& s = sweep_series[k];
        s.name = objective_name(k);
        s.x.push_back(g.sweep_value);
        s.y.push_back(curve.y.back());
      }
      curves.push_back(std::move(curve));
    }
    const fs::path svg = c.output / ("convergence" + (g.tag.empty() ? "" : "_" + g.tag) + ".svg");
    write_line_chart_svg(svg, c.name + (g.label == "all" ? "" : " (" + g.label + ")"), "step",
                         "median estimate", curves, reference);
    manifest.add(svg);
  }
  manifest.add(agg_path);
  if (c.kind == ExperimentKind::kSweep) {
    std::vector<SvgSeries> series;
    for (auto& [k, s] : sweep_series) series.push_back(s);
    SvgSeries truth{"oracle", {}, {}};
    for (const auto& g : groups) {
      if (!g.oracle) continue;
      truth.x.push_back(g.sweep_value);
      truth.y.push_back(*g.oracle);
    }
    if (!truth.x.empty()) series.push_back(truth);
    const fs::path svg = c.output / "sweep.svg";
    write_line_chart_svg(svg, c.name, c.sweep.parameter, "final median estimate", series);
    manifest.add(svg);
  }
  finish_outcome(outcome);
  return outcome;
}

ExperimentOutcome run_curvature(const ExperimentConfig& c, Manifest& manifest, std::ostream& log) {
  const auto family = c.divergence.f_family();
  const auto q = GaussianSpec::scalar(c.data.q_mean[0], c.data.q_var[0]);
  const auto p = GaussianSpec::scalar(c.data.p_mean[0], c.data.p_var[0]);
  const fs::path path = c.output / "curvature.csv";
  CsvWriter w(path, kCurvatureCsvHeader);
  ExperimentOutcome outcome;
  for (const auto& dir : c.curvature.directions) {
    const auto coeffs = parse_polynomial(dir);
    const ScalarFunction psi = [coeffs](double x) {
      double v = 0.0;
      for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
      return v;
    };
    ++outcome.runs;
    auto report = fdiv_hessian_closed_forms(family, q, p, psi, dir);
    const auto measures = quadrature_measures(q, p);
    const ScalarFunction phi = [&](double x) { return family.f_prime(std::exp(q.log_density(x) - p.log_density(x))); };
    bool failed = false;
    for (std::size_t k = 0; k < kCurvatureSets.size(); ++k) {
      try {
        report.numeric[k] = gateaux_second_derivative(family, kCurvatureSets[k], measures, phi, psi, c.curvature.epsilon);
      } catch (const std::exception& e) {
        failed = true;
        manifest.note_failure("direction " + dir + " " + transform_set_name(kCurvatureSets[k]) + ": " + e.what());
      }
      const double closed = report.closed_form[k];
      const double rel = std::abs(report.numeric[k] - closed) / std::max(std::abs(closed), 1e-6);
      w.row({dir, transform_set_name(kCurvatureSets[k]), format_number(report.numeric[k]), format_number(closed),
             format_number(rel)});
      log << "direction " << dir << ' ' << transform_set_name(kCurvatureSets[k]) << ": numeric "
          << format_number(report.numeric[k]) << " closed form " << format_number(closed) << '\n';
    }
    if (failed) ++outcome.failed;
  }
  manifest.add(path);
  finish_outcome(outcome);
  return outcome;
}

ExperimentOutcome run_variance(const ExperimentConfig& c, Manifest& manifest, std::ostream& log) {
  const auto family = c.divergence.f_family();
  const auto q = GaussianSpec::scalar(c.data.q_mean[0], c.data.q_var[0]);
  const auto p = GaussianSpec::scalar(c.data.p_mean[0], c.data.p_var[0]);
  ExperimentOutcome outcome;
  for (ObjectiveKind k : c.objectives) {
    const auto form = k == ObjectiveKind::kAlphaScale ? OptimizerForm::kAlphaScale : OptimizerForm::kLegendre;
    const ScalarFunction phi = [&, form](double x) {
      return optimizer_from_ratio(family, std::exp(q.log_density(x) - p.log_density(x)), form);
    };
    const fs::path path = c.output / ("variance_" + objective_name(k) + ".csv");
    CsvWriter w(path, kVarianceCsvHeader);
    for (std::size_t n : c.variance.n) {
      ++outcome.runs;
      const auto r = k == ObjectiveKind::kAlphaScale
                         ? alpha_scale_asymptotic_variance(family.alpha(), phi, q, p, n, c.variance.repeats,
                                                           c.train.seed)
                         : lt_variance(family, phi, q, p, n, c.variance.repeats, c.train.seed);
      w.row({std::to_string(n), format_number(r.formula), format_number(r.mc), format_number(r.mc_se)});
      log << objective_name(k) << " n " << n << ": formula " << format_number(r.formula) << " monte carlo "
          << format_number(r.mc) << " +- " << format_number(r.mc_se) << '\n';
    }
    manifest.add(path);
  }
  if (family.kind() == FamilyKind::kHellinger) {
    const double d = oracle_divergence(family, q, p).value;
    if (d > 0.0 && d < 8.0) {
      log << "hellinger divergence " << format_number(d) << ", relative variance " << format_number(hellinger_relative_variance(d))
          << '\n';
    }
  }
  finish_outcome(outcome);
  return outcome;
}

ExperimentOutcome run_consistency(const ExperimentConfig& c, Manifest& manifest, std::ostream& log) {
  auto images = std::make_shared<const ImageSampler>(c.data);
  const auto sources = make_consistency_sources(c, images);
  struct Row {
    RunStatus status = RunStatus::kFailed;
    std::string message;
    double base = std::nan(""), kernel = std::nan(""), joint = std::nan("");
    double dp = std::nan(""), prod = std::nan("");
  };
  std::vector<std::pair<ObjectiveKind, std::size_t>> tasks;
  for (ObjectiveKind k : c.objectives) {
    for (std::size_t r = 0; r < c.repeats; ++r) tasks.emplace_back(k, r);
  }
  std::vector<Row> rows(tasks.size());
  std::vector<std::vector<fs::path>> written(tasks.size());
  std::mutex log_mutex;
  const fs::path runs_dir = c.output / "runs";
  run_pool(tasks.size(), c.workers, [&](std::size_t i) {
    const auto [kind, repeat] = tasks[i];
    TrainConfig tc = c.train;
    tc.seed = c.train.seed + repeat;
    const auto spec = c.objective_spec(kind);
    Row& row = rows[i];
    auto fit = [&](const PairSource& src, const std::string& part) {
      const auto model = make_model(c, kind, src.dim());
      const auto rec = train(spec, *model, src, src, tc);
      const auto file = runs_dir / (part + "_" + objective_name(kind) + "_seed" + std::to_string(tc.seed) + ".csv");
      write_trace_csv(file, rec);
      written[i].push_back(file);
      return rec.final_estimate;
    };
    try {
      row.base = fit(*sources.base, "base");
      row.kernel = fit(*sources.kernel, "kernel");
      row.joint = fit(*sources.product, "product");
      row.status = RunStatus::kOk;
      try {
        row.dp = data_processing_check(row.kernel, row.base);
        const std::vector<double> factors(c.consistency.factors, row.base);
        const double a = spec.family.is_alpha_like() ? spec.family.alpha() : 1.0;
        if (spec.family.is_alpha_like()) row.prod = product_property_check(a, factors, row.joint);
      } catch (const DegenerateError& e) {
        row.message = e.what();
      }
    } catch (const DivergedError& e) {
      row.status = RunStatus::kDiverged;
      row.message = e.what();
    } catch (const std::exception& e) {
      row.status = RunStatus::kFailed;
      row.message = e.what();
    }
    std::lock_guard lock(log_mutex);
    log << objective_name(kind) << " seed " << tc.seed << ": " << status_name(row.status) << " data-processing "
        << format_number(row.dp) << " product " << format_number(row.prod) << '\n';
  });

  ExperimentOutcome outcome;
  outcome.runs = tasks.size();
  const fs::path path = c.output / "consistency.csv";
  {
    CsvWriter w(path, kConsistencyCsvHeader);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const auto& row = rows[i];
      for (const auto& f : written[i]) manifest.add(f);
      if (row.status == RunStatus::kDiverged) ++outcome.diverged;
      if (row.status == RunStatus::kFailed) ++outcome.failed;
      if (row.status != RunStatus::kOk || !row.message.empty()) {
        manifest.note_failure(objective_name(tasks[i].first) + " seed " +
                              std::to_string(c.train.seed + tasks[i].second) + ": " + status_name(row.status) + ": " +
                              row.message);
      }
      w.row({objective_name(tasks[i].first), std::to_string(c.train.seed + tasks[i].second), format_number(row.base),
             format_number(row.kernel), format_number(row.joint), format_number(row.dp), format_number(row.prod)});
    }
  }
  manifest.add(path);
  const fs::path summary = c.output / "consistency_summary.csv";
  {
    CsvWriter w(summary, kConsistencySummaryCsvHeader);
    for (ObjectiveKind k : c.objectives) {
      std::vector<double> dp, prod;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].first != k) continue;
        if (std::isfinite(rows[i].dp)) dp.push_back(rows[i].dp);
        if (std::isfinite(rows[i].prod)) prod.push_back(rows[i].prod);
      }
      w.row({objective_name(k), "data_processing", dp.empty() ? "" : format_number(median(dp)), "1",
             std::to_string(dp.size())});
      w.row({objective_name(k), "product", prod.empty() ? "" : format_number(median(prod)), "1",
             std::to_string(prod.size())});
    }
  }
  manifest.add(summary);
  finish_outcome(outcome);
  return outcome;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& c, std::ostream& log) {
  fs::create_directories(c.output / "runs");
  Manifest manifest;
  ExperimentOutcome outcome;
  switch (c.kind) {
    case ExperimentKind::kEstimate:
    case ExperimentKind::kMi:
    case ExperimentKind::kSweep:
      outcome = run_training(c, manifest, log);
      break;
    case ExperimentKind::kCurvature:
      outcome = run_curvature(c, manifest, log);
      break;
    case ExperimentKind::kVariance:
      outcome = run_variance(c, manifest, log);
      break;
    case ExperimentKind::kConsistency:
      outcome = run_consistency(c, manifest, log);
      break;
  }
  manifest.write(c.output, c.name);
  return outcome;
}

int run_config_file(const fs::path& path, std::ostream& err, const std::optional<fs::path>& output_override) {
  LoadedConfig loaded;
  try {
    loaded = load_experiment(ConfigFile::load(path));
  } catch (const ParseError& e) {
    err << path.string() << ':' << e.line() << ':' << e.column() << ": " << e.what() << '\n';
    return kExitInvalid;
  } catch (const IoError& e) {
    err << e.what() << '\n';
    return kExitInvalid;
  }
  if (!loaded.diagnostics.empty()) {
    for (const auto& d : loaded.diagnostics) err << d.field << ": " << d.message << '\n';
    return kExitInvalid;
  }
  if (output_override) loaded.config.output = *output_override;
  try {
    const auto outcome = run_experiment(loaded.config, err);
    if (outcome.exit_code == kExitDiverged) err << "all runs diverged\n";
    return outcome.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace divgauge
