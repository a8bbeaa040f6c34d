#include "divgauge/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "divgauge/errors.hpp"

namespace divgauge {

namespace {

bool is_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(std::string_view(text).substr(start, comma == std::string::npos ? comma : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> to_signed(const std::string& s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile file;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == line.size()) continue;
    const int col = static_cast<int>(i) + 1;
    if (line[i] == '[') {
      const auto close = line.find(']', i);
      if (close == std::string_view::npos) throw ParseError("unterminated section header", line_no, col);
      const std::string name = trim(line.substr(i + 1, close - i - 1));
      if (name.empty()) throw ParseError("empty section name", line_no, col + 1);
      for (std::size_t k = 0; k < name.size(); ++k) {
        if (!is_key_char(name[k])) {
          throw ParseError("invalid character in section name", line_no, static_cast<int>(line.find(name) + k) + 1);
        }
      }
      if (!trim(line.substr(close + 1)).empty()) {
        throw ParseError("unexpected text after section header", line_no, static_cast<int>(close) + 2);
      }
      section = name;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, col);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no, col);
    for (std::size_t k = 0; k < key.size(); ++k) {
      if (!is_key_char(key[k])) throw ParseError("invalid character in key", line_no, col + static_cast<int>(k));
    }
    if (section.empty()) throw ParseError("key outside of any [section]", line_no, col);
    std::size_t v = eq + 1;
    while (v < line.size() && std::isspace(static_cast<unsigned char>(line[v]))) ++v;
    const std::string full = section + "." + key;
    if (file.entries_.count(full)) throw ParseError("duplicate key '" + full + "'", line_no, col);
    file.entries_[full] = ConfigEntry{trim(line.substr(eq + 1)), line_no, static_cast<int>(v) + 1};
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const ConfigEntry* ConfigFile::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kEstimate:
      return "estimate";
    case ExperimentKind::kMi:
      return "mi";
    case ExperimentKind::kCurvature:
      return "curvature";
    case ExperimentKind::kVariance:
      return "variance";
    case ExperimentKind::kConsistency:
      return "consistency";
    case ExperimentKind::kSweep:
      return "sweep";
  }
  return "unknown";
}

DivergenceFamily DivergenceConfig::f_family() const {
  switch (family) {
    case FamilyChoice::kKl:
      return DivergenceFamily::kl();
    case FamilyChoice::kAlpha:
      return DivergenceFamily::alpha(alpha);
    case FamilyChoice::kChi2:
      return DivergenceFamily::chi_squared();
    case FamilyChoice::kHellinger:
      return DivergenceFamily::hellinger();
    case FamilyChoice::kRenyi:
      break;
  }
  throw DomainError("renyi is not an f-divergence family");
}

DivergenceSpec DivergenceConfig::spec() const {
  if (family == FamilyChoice::kRenyi) return RenyiOrder{alpha};
  return f_family();
}

std::string DivergenceConfig::name() const {
  if (family == FamilyChoice::kRenyi) {
    std::ostringstream s;
    s << "renyi(" << alpha << ")";
    return s.str();
  }
  return f_family().name();
}

ObjectiveSpec ExperimentConfig::objective_spec(ObjectiveKind kind) const {
  ObjectiveSpec s;
  s.kind = kind;
  if (divergence.family == FamilyChoice::kRenyi) {
    s.renyi_alpha = divergence.alpha;
  } else {
    s.family = divergence.f_family();
  }
  return s;
}

namespace {

class Reader {
 public:
  Reader(const ConfigFile& file, std::vector<Diagnostic>& diags) : file_(file), diags_(diags) {}

  const ConfigEntry* get(const std::string& key) {
    used_.insert(key);
    return file_.find(key);
  }

  void fail(const std::string& key, const std::string& message) {
    const auto* e = file_.find(key);
    std::string where;
    if (e) where = " (line " + std::to_string(e->line) + ")";
    diags_.push_back({key, message + where});
  }

  void text(const std::string& key, std::string& out) {
    if (const auto* e = get(key)) out = e->value;
  }

  template <typename T>
  void choice(const std::string& key, T& out, const std::vector<std::pair<std::string, T>>& options) {
    const auto* e = get(key);
    if (!e) return;
    for (const auto& [name, value] : options) {
      if (name == e->value) {
        out = value;
        return;
      }
    }
    std::string names;
    for (const auto& o : options) names += (names.empty() ? "" : ", ") + o.first;
    fail(key, "unknown value '" + e->value + "'; expected one of: " + names);
  }

  void real(const std::string& key, double& out) {
    const auto* e = get(key);
    if (!e) return;
    const auto v = to_double(e->value);
    if (!v || !std::isfinite(*v)) return fail(key, "expected a number, got '" + e->value + "'");
    out = *v;
  }

  void count(const std::string& key, std::size_t& out) {
    const auto* e = get(key);
    if (!e) return;
    const auto v = to_unsigned(e->value);
    if (!v) return fail(key, "expected a non-negative integer, got '" + e->value + "'");
    out = static_cast<std::size_t>(*v);
  }

  void u64(const std::string& key, std::uint64_t& out) {
    const auto* e = get(key);
    if (!e) return;
    const auto v = to_unsigned(e->value);
    if (!v) return fail(key, "expected a non-negative integer, got '" + e->value + "'");
    out = *v;
  }

  void integer(const std::string& key, int& out) {
    const auto* e = get(key);
    if (!e) return;
    const auto v = to_signed(e->value);
    if (!v || *v < -1000000 || *v > 1000000) return fail(key, "expected an integer, got '" + e->value + "'");
    out = static_cast<int>(*v);
  }

  void reals(const std::string& key, std::vector<double>& out) {
    const auto* e = get(key);
    if (!e) return;
    std::vector<double> values;
    for (const auto& item : split_list(e->value)) {
      const auto v = to_double(item);
      if (!v || !std::isfinite(*v)) return fail(key, "expected a list of numbers, got '" + e->value + "'");
      values.push_back(*v);
    }
    out = values;
  }

  void counts(const std::string& key, std::vector<std::size_t>& out) {
    const auto* e = get(key);
    if (!e) return;
    std::vector<std::size_t> values;
    for (const auto& item : split_list(e->value)) {
      const auto v = to_unsigned(item);
      if (!v) return fail(key, "expected a list of non-negative integers, got '" + e->value + "'");
      values.push_back(static_cast<std::size_t>(*v));
    }
    out = values;
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const auto* e = get(key)) out = split_list(e->value);
  }

  void report_unknown() {
    for (const auto& [key, entry] : file_.entries()) {
      if (!used_.count(key)) diags_.push_back({key, "unknown key (line " + std::to_string(entry.line) + ")"});
    }
  }

 private:
  const ConfigFile& file_;
  std::vector<Diagnostic>& diags_;
  std::set<std::string> used_;
};

const std::vector<std::pair<std::string, ExperimentKind>> kKinds{
    {"estimate", ExperimentKind::kEstimate}, {"mi", ExperimentKind::kMi},
    {"curvature", ExperimentKind::kCurvature}, {"variance", ExperimentKind::kVariance},
    {"consistency", ExperimentKind::kConsistency}, {"sweep", ExperimentKind::kSweep}};

const std::vector<std::string> kSweepParameters{"data.rho",      "data.embed_dim", "data.mi_dim",    "divergence.alpha",
                                                "train.lr",      "train.steps",    "train.minibatch", "data.translate_sigma",
                                                "data.q_mean",   "data.q_var"};

}  // namespace

bool is_sweep_parameter(const std::string& parameter) {
  return std::find(kSweepParameters.begin(), kSweepParameters.end(), parameter) != kSweepParameters.end();
}

void apply_sweep_value(ExperimentConfig& c, const std::string& parameter, double value) {
  auto as_count = [&](double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw DomainError(parameter + " needs a non-negative integer value");
    return static_cast<std::size_t>(v);
  };
  if (parameter == "data.rho") {
    c.data.rho = value;
  } else if (parameter == "data.embed_dim") {
    c.data.embed_dim = as_count(value);
  } else if (parameter == "data.mi_dim") {
    c.data.mi_dim = as_count(value);
  } else if (parameter == "divergence.alpha") {
    c.divergence.alpha = value;
  } else if (parameter == "train.lr") {
    c.train.lr = value;
  } else if (parameter == "train.steps") {
    c.train.steps = as_count(value);
  } else if (parameter == "train.minibatch") {
    c.train.minibatch = as_count(value);
  } else if (parameter == "data.translate_sigma") {
    c.data.translate_sigma = value;
  } else if (parameter == "data.q_mean") {
    c.data.q_mean.assign(c.data.q_mean.size(), value);
  } else if (parameter == "data.q_var") {
    c.data.q_var.assign(c.data.q_var.size(), value);
  } else {
    throw DomainError("unknown sweep parameter '" + parameter + "'");
  }
}

LoadedConfig load_experiment(const ConfigFile& file, const std::filesystem::path& base_dir) {
  LoadedConfig out;
  auto& c = out.config;
  Reader r(file, out.diagnostics);

  if (!file.find("experiment.kind")) out.diagnostics.push_back({"experiment.kind", "missing required key"});
  r.choice("experiment.kind", c.kind, kKinds);
  r.text("experiment.name", c.name);
  std::string output;
  r.text("experiment.output", output);
  if (!output.empty()) c.output = output;
  if (c.output.is_relative() && !base_dir.empty()) c.output = base_dir / c.output;
  r.count("experiment.repeats", c.repeats);
  r.count("experiment.workers", c.workers);

  r.choice<FamilyChoice>("divergence.family", c.divergence.family,
                         {{"kl", FamilyChoice::kKl},
                          {"alpha", FamilyChoice::kAlpha},
                          {"chi2", FamilyChoice::kChi2},
                          {"hellinger", FamilyChoice::kHellinger},
                          {"renyi", FamilyChoice::kRenyi}});
  r.real("divergence.alpha", c.divergence.alpha);

  if (const auto* e = r.get("objective.kinds")) {
    c.objectives.clear();
    for (const auto& name : split_list(e->value)) {
      if (const auto k = parse_objective(name)) {
        c.objectives.push_back(*k);
      } else {
        r.fail("objective.kinds", "unknown objective '" + name + "'");
      }
    }
  }

  r.choice<ModelType>("model.type", c.model.type, {{"mlp", ModelType::kMlp}, {"submanifold", ModelType::kSubmanifold}});
  r.counts("model.hidden", c.model.hidden);
  r.choice<OutputChoice>("model.output", c.model.output,
                         {{"auto", OutputChoice::kAuto},
                          {"identity", OutputChoice::kIdentity},
                          {"exp", OutputChoice::kExp},
                          {"negexp", OutputChoice::kNegExp}});
  r.choice<SubmanifoldChoice>("model.mode", c.model.mode,
                              {{"auto", SubmanifoldChoice::kAuto},
                               {"generic", SubmanifoldChoice::kGeneric},
                               {"kl_linear", SubmanifoldChoice::kKlLinear},
                               {"alpha_scale", SubmanifoldChoice::kAlphaScale}});

  auto& d = c.data;
  r.choice<DataSource>("data.source", d.source,
                       {{"gaussian", DataSource::kGaussian}, {"mi", DataSource::kMi}, {"images", DataSource::kImages}});
  r.count("data.dim", d.dim);
  r.reals("data.q_mean", d.q_mean);
  r.reals("data.q_var", d.q_var);
  r.reals("data.p_mean", d.p_mean);
  r.reals("data.p_var", d.p_var);
  r.count("data.mi_dim", d.mi_dim);
  r.real("data.rho", d.rho);
  r.count("data.embed_dim", d.embed_dim);
  r.u64("data.embed_seed", d.embed_seed);
  r.choice<ImageChoice>("data.images", d.images,
                        {{"auto", ImageChoice::kAuto}, {"mnist", ImageChoice::kMnist}, {"glyphs", ImageChoice::kGlyphs}});
  r.real("data.translate_sigma", d.translate_sigma);
  r.integer("data.q_max_label", d.q_max_label);
  r.integer("data.p_max_label", d.p_max_label);
  r.u64("data.glyph_seed", d.glyph_seed);
  r.count("data.dataset_size", d.dataset_size);

  auto& t = c.train;
  r.count("train.steps", t.steps);
  r.count("train.minibatch", t.minibatch);
  r.real("train.lr", t.lr);
  r.real("train.adam_beta1", t.adam_beta1);
  r.real("train.adam_beta2", t.adam_beta2);
  r.real("train.adam_eps", t.adam_eps);
  r.u64("train.seed", t.seed);
  r.count("train.eval_every", t.eval_every);
  r.count("train.eval_samples", t.eval_samples);
  r.count("train.transform_substeps", t.transform_substeps);

  r.strings("curvature.directions", c.curvature.directions);
  r.real("curvature.epsilon", c.curvature.epsilon);
  r.counts("variance.n", c.variance.n);
  r.count("variance.repeats", c.variance.repeats);
  r.real("consistency.kernel_sigma", c.consistency.kernel_sigma);
  r.count("consistency.factors", c.consistency.factors);

  r.choice<ExperimentKind>("sweep.base", c.sweep.base,
                           {{"estimate", ExperimentKind::kEstimate}, {"mi", ExperimentKind::kMi}});
  r.text("sweep.parameter", c.sweep.parameter);
  r.reals("sweep.values", c.sweep.values);

  r.report_unknown();
  if (out.diagnostics.empty()) {
    auto more = check_experiment(c);
    out.diagnostics.insert(out.diagnostics.end(), more.begin(), more.end());
  }
  return out;
}

std::optional<MnistFiles> find_mnist() {
  const char* dir = std::getenv("DIVGAUGE_DATA_DIR");
  if (!dir || !*dir) return std::nullopt;
  const std::filesystem::path root(dir);
  MnistFiles f{root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte"};
  if (!std::filesystem::exists(f.images) || !std::filesystem::exists(f.labels)) return std::nullopt;
  return f;
}

namespace {

void check_gaussian_side(std::vector<Diagnostic>& out, const std::string& prefix, const std::vector<double>& mean,
                         const std::vector<double>& var, std::size_t dim) {
  if (mean.size() != 1 && mean.size() != dim) {
    out.push_back({"data." + prefix + "_mean", "needs 1 or data.dim = " + std::to_string(dim) + " entries"});
  }
  if (var.size() != 1 && var.size() != dim) {
    out.push_back({"data." + prefix + "_var", "needs 1 or data.dim = " + std::to_string(dim) + " entries"});
  }
  for (double v : var) {
    if (!(v > 0.0)) {
      out.push_back({"data." + prefix + "_var", "variances must be positive"});
      break;
    }
  }
}

bool objective_allows_output(OutputConstraint need, OutputChoice out) {
  if (out == OutputChoice::kAuto) return true;
  switch (need) {
    case OutputConstraint::kPositive:
      return out == OutputChoice::kExp;
    case OutputConstraint::kNegative:
      return out == OutputChoice::kNegExp;
    case OutputConstraint::kNone:
      return true;
  }
  return true;
}

}  // namespace

std::vector<Diagnostic> check_experiment(const ExperimentConfig& c) {
  std::vector<Diagnostic> out;
  const auto& dv = c.divergence;
  const bool renyi = dv.family == FamilyChoice::kRenyi;

  if (c.repeats == 0) out.push_back({"experiment.repeats", "must be at least 1"});
  if (c.name.empty()) out.push_back({"experiment.name", "must not be empty"});

  const bool alpha_ok = dv.family != FamilyChoice::kAlpha ||
                        (dv.alpha > 0.0 && dv.alpha < 1.0) || (dv.alpha > 1.0 && dv.alpha <= 4.0);
  if (!alpha_ok) out.push_back({"divergence.alpha", "alpha family needs alpha in (0,1) or (1,4]"});
  if (renyi && !(dv.alpha > 0.0 && dv.alpha != 1.0)) {
    out.push_back({"divergence.alpha", "renyi order must be positive and different from 1"});
  }

  const bool trains = c.kind == ExperimentKind::kEstimate || c.kind == ExperimentKind::kMi ||
                      c.kind == ExperimentKind::kConsistency || c.kind == ExperimentKind::kSweep;
  const bool uses_objectives = alpha_ok && (trains || c.kind == ExperimentKind::kVariance);

  if (uses_objectives) {
    if (c.objectives.empty()) out.push_back({"objective.kinds", "at least one objective is required"});
    for (ObjectiveKind k : c.objectives) {
      const std::string name = objective_name(k);
      const bool renyi_objective = k == ObjectiveKind::kRenyi || k == ObjectiveKind::kRenyiPowerApprox;
      if (renyi_objective != renyi) {
        out.push_back({"objective.kinds, divergence.family", name + " is incompatible with family " + dv.name()});
        continue;
      }
      if (renyi && dv.alpha > 0.0 && dv.alpha != 1.0) {
        try {
          c.objective_spec(k).validate();
        } catch (const DomainError& e) {
          out.push_back({"objective.kinds, divergence.alpha", e.what()});
        }
        continue;
      }
      try {
        const auto spec = c.objective_spec(k);
        spec.validate();
        if (c.model.type == ModelType::kMlp && !objective_allows_output(spec.output_constraint(), c.model.output)) {
          out.push_back({"model.output, objective.kinds", "output map cannot satisfy the sign required by " + name});
        }
        if (c.model.type == ModelType::kSubmanifold && c.model.mode != SubmanifoldChoice::kAuto) {
          const auto need = spec.output_constraint();
          const bool ok = need == OutputConstraint::kNone ||
                          (need == OutputConstraint::kPositive && c.model.mode == SubmanifoldChoice::kAlphaScale) ||
                          (need == OutputConstraint::kNegative && c.model.mode == SubmanifoldChoice::kGeneric);
          if (!ok) out.push_back({"model.mode, objective.kinds", "submanifold mode cannot satisfy the sign required by " + name});
        }
        if (c.model.type == ModelType::kSubmanifold && c.model.mode == SubmanifoldChoice::kAlphaScale &&
            !spec.family.is_alpha_like()) {
          out.push_back({"model.mode, divergence.family", "alpha_scale submanifold needs an alpha or hellinger family"});
        }
      } catch (const DomainError& e) {
        out.push_back({"objective.kinds, divergence.family", e.what()});
      }
    }
  }

  if (trains) {
    try {
      c.train.validate();
    } catch (const DomainError& e) {
      out.push_back({"train", e.what()});
    }
    if (c.data.dataset_size > 0 && c.train.minibatch > c.data.dataset_size) {
      out.push_back({"train.minibatch, data.dataset_size", "minibatch exceeds the fixed dataset size"});
    }
    if (c.model.type == ModelType::kMlp && c.model.hidden.empty()) {
      out.push_back({"model.hidden", "at least one hidden layer is required"});
    }
    for (std::size_t h : c.model.hidden) {
      if (h == 0) {
        out.push_back({"model.hidden", "hidden layer widths must be positive"});
        break;
      }
    }
  }

  const auto& d = c.data;
  auto need_source = [&](DataSource s, const std::string& what) {
    if (d.source != s) out.push_back({"data.source, experiment.kind", what});
  };
  ExperimentKind kind = c.kind;
  if (kind == ExperimentKind::kSweep) {
    kind = c.sweep.base;
    if (!is_sweep_parameter(c.sweep.parameter)) {
      out.push_back({"sweep.parameter", "unknown sweep parameter '" + c.sweep.parameter + "'"});
    }
    if (c.sweep.values.empty()) out.push_back({"sweep.values", "at least one value is required"});
    if (is_sweep_parameter(c.sweep.parameter)) {
      for (double v : c.sweep.values) {
        ExperimentConfig copy = c;
        copy.kind = c.sweep.base;
        try {
          apply_sweep_value(copy, c.sweep.parameter, v);
        } catch (const DomainError& e) {
          out.push_back({"sweep.values", e.what()});
          break;
        }
        for (auto& diag : check_experiment(copy)) {
          out.push_back({diag.field, diag.message + " (sweep value " + std::to_string(v) + ")"});
        }
      }
    }
  }

  switch (kind) {
    case ExperimentKind::kEstimate:
      if (d.source == DataSource::kMi) out.push_back({"data.source, experiment.kind", "use kind = mi for mi data"});
      break;
    case ExperimentKind::kMi:
      need_source(DataSource::kMi, "mi experiments need data.source = mi");
      break;
    case ExperimentKind::kCurvature:
    case ExperimentKind::kVariance:
      need_source(DataSource::kGaussian, experiment_kind_name(kind) + " experiments need data.source = gaussian");
      if (d.dim != 1) out.push_back({"data.dim", experiment_kind_name(kind) + " experiments need data.dim = 1"});
      if (renyi) out.push_back({"divergence.family", "needs an f-divergence family"});
      break;
    case ExperimentKind::kConsistency:
      need_source(DataSource::kImages, "consistency experiments need data.source = images");
      if (c.consistency.factors == 0) out.push_back({"consistency.factors", "must be at least 1"});
      if (!(c.consistency.kernel_sigma > 0.0)) out.push_back({"consistency.kernel_sigma", "must be positive"});
      break;
    case ExperimentKind::kSweep:
      break;
  }
  if (c.kind == ExperimentKind::kSweep) return out;

  switch (d.source) {
    case DataSource::kGaussian:
      if (d.dim == 0) out.push_back({"data.dim", "must be positive"});
      check_gaussian_side(out, "q", d.q_mean, d.q_var, d.dim);
      check_gaussian_side(out, "p", d.p_mean, d.p_var, d.dim);
      break;
    case DataSource::kMi:
      if (d.mi_dim == 0) out.push_back({"data.mi_dim", "must be positive"});
      if (!(std::abs(d.rho) < 1.0)) out.push_back({"data.rho", "needs |rho| < 1"});
      if (d.embed_dim != 0 && d.embed_dim < d.mi_dim) {
        out.push_back({"data.embed_dim, data.mi_dim", "embedding dimension must be 0 or at least data.mi_dim"});
      }
      break;
    case DataSource::kImages:
      for (const auto& [key, v] : {std::pair<std::string, int>{"data.q_max_label", d.q_max_label},
                                   std::pair<std::string, int>{"data.p_max_label", d.p_max_label}}) {
        if (v < 0 || v > 9) out.push_back({key, "labels range over 0..9"});
      }
      if (d.translate_sigma < 0.0) out.push_back({"data.translate_sigma", "must be non-negative"});
      if (d.images == ImageChoice::kMnist && !find_mnist()) {
        out.push_back({"data.images", "mnist requested but DIVGAUGE_DATA_DIR does not hold the training IDX files"});
      }
      break;
  }

  if (kind == ExperimentKind::kCurvature) {
    for (const auto& dir : c.curvature.directions) {
      try {
        parse_polynomial(dir);
      } catch (const DomainError& e) {
        out.push_back({"curvature.directions", e.what()});
      }
    }
    if (c.curvature.directions.empty()) out.push_back({"curvature.directions", "at least one direction is required"});
    if (!(c.curvature.epsilon >= 1e-4 && c.curvature.epsilon <= 1e-1)) {
      out.push_back({"curvature.epsilon", "must lie in [1e-4, 1e-1]"});
    }
    if (!renyi && d.dim == 1 && d.q_mean == d.p_mean && d.q_var == d.p_var) {
      out.push_back({"data.q_mean, data.p_mean", "curvature needs Q != P"});
    }
  }
  if (kind == ExperimentKind::kVariance) {
    if (c.variance.n.empty()) out.push_back({"variance.n", "at least one sample size is required"});
    for (std::size_t n : c.variance.n) {
      if (n < 2) {
        out.push_back({"variance.n", "sample sizes must be at least 2"});
        break;
      }
    }
    if (c.variance.repeats < 2) out.push_back({"variance.repeats", "must be at least 2"});
    for (ObjectiveKind k : c.objectives) {
      if (k != ObjectiveKind::kLt && k != ObjectiveKind::kAlphaScale) {
        out.push_back({"objective.kinds, experiment.kind", "variance experiments support lt and alpha_scale only"});
        break;
      }
    }
  }
  return out;
}

std::vector<Diagnostic> validate_config(const std::filesystem::path& path) {
  const auto file = ConfigFile::load(path);
  return load_experiment(file).diagnostics;
}

std::vector<double> parse_polynomial(const std::string& text) {
  std::vector<double> coeffs;
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  }
  if (s.empty()) throw DomainError("empty direction");
  auto bad = [&]() { return DomainError("cannot parse direction '" + text + "'"); };
  std::size_t i = 0;
  while (i < s.size()) {
    double sign = 1.0;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1.0 : 1.0;
      ++i;
    } else if (i != 0) {
      throw bad();
    }
    std::size_t j = i;
    while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.' || s[j] == 'e' ||
                            ((s[j] == '+' || s[j] == '-') && j > i && s[j - 1] == 'e'))) {
      ++j;
    }
    const bool has_number = j > i;
    double c = 1.0;
    if (has_number) {
      const auto v = to_double(s.substr(i, j - i));
      if (!v) throw bad();
      c = *v;
    }
    i = j;
    std::size_t power = 0;
    if (has_number && i < s.size() && s[i] == '*') {
      ++i;
      if (i >= s.size() || s[i] != 'x') throw bad();
    }
    if (i < s.size() && s[i] == 'x') {
      power = 1;
      ++i;
      if (i < s.size() && s[i] == '^') {
        ++i;
        std::size_t k = i;
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
        if (k == i || k - i > 2) throw bad();
        power = static_cast<std::size_t>(std::stoul(s.substr(i, k - i)));
        if (power > 16) throw DomainError("direction degree above 16 in '" + text + "'");
        i = k;
      }
    } else if (!has_number) {
      throw bad();
    }
    if (coeffs.size() <= power) coeffs.resize(power + 1, 0.0);
    coeffs[power] += sign * c;
  }
  return coeffs;
}

}  // namespace divgauge
