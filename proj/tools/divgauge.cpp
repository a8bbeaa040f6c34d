#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "divgauge/config.hpp"
#include "divgauge/errors.hpp"
#include "divgauge/experiment.hpp"
#include "divgauge/oracle.hpp"
#include "divgauge/report.hpp"
#include "json.hpp"

using namespace divgauge;

namespace {

// "MEAN:VAR" with comma-separated lists for diagonal multivariate laws.
GaussianSpec parse_gaussian(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw DomainError("Gaussian spec '" + text + "' must look like MEAN:VAR");
  auto numbers = [&](const std::string& part) {
    std::vector<double> out;
    std::stringstream ss(part);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used == 0 || used != item.size()) throw DomainError("bad number '" + item + "' in Gaussian spec");
      out.push_back(v);
    }
    return out;
  };
  auto mean = numbers(text.substr(0, colon));
  auto var = numbers(text.substr(colon + 1));
  if (mean.empty() || var.empty()) throw DomainError("empty Gaussian spec '" + text + "'");
  const std::size_t dim = std::max(mean.size(), var.size());
  if (mean.size() == 1) mean.assign(dim, mean[0]);
  if (var.size() == 1) var.assign(dim, var[0]);
  if (mean.size() != var.size()) throw DomainError("mean and variance lists differ in length");
  for (double v : var) {
    if (!(v > 0.0)) throw DomainError("variances must be positive");
  }
  return GaussianSpec::diagonal(Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(dim)),
                                Eigen::Map<Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(dim)));
}

DivergenceSpec parse_family(const std::string& family, double alpha) {
  if (family == "kl") return DivergenceFamily::kl();
  if (family == "chi2") return DivergenceFamily::chi_squared();
  if (family == "hellinger") return DivergenceFamily::hellinger();
  if (family == "alpha") return DivergenceFamily::alpha(alpha);
  if (family == "renyi") {
    if (!(alpha > 0.0 && alpha != 1.0)) throw DomainError("renyi order must be positive and different from 1");
    return RenyiOrder{alpha};
  }
  throw DomainError("unknown family '" + family + "'");
}

int cmd_validate(const std::string& path) {
  try {
    const auto diags = validate_config(path);
    if (diags.empty()) {
      std::cout << path << ": ok\n";
      return kExitOk;
    }
    for (const auto& d : diags) std::cout << d.field << ": " << d.message << '\n';
    return kExitInvalid;
  } catch (const ParseError& e) {
    std::cerr << path << ':' << e.line() << ':' << e.column() << ": " << e.what() << '\n';
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
  }
  return kExitInvalid;
}

int cmd_oracle(const std::string& family, double alpha, const std::string& q_text, const std::string& p_text,
               bool json) {
  DivergenceSpec spec = DivergenceFamily::kl();
  GaussianSpec q = GaussianSpec::scalar(0.0, 1.0), p = q;
  try {
    spec = parse_family(family, alpha);
    q = parse_gaussian(q_text);
    p = parse_gaussian(p_text);
    if (q.dim() != p.dim()) throw DomainError("Q and P differ in dimension");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  try {
    const auto r = oracle_divergence(spec, q, p);
    if (json) {
      nlohmann::json out{{"family", family},
                         {"value", r.value},
                         {"std_error", r.std_error},
                         {"method", r.monte_carlo ? "monte_carlo" : "quadrature"}};
      if (family == "alpha" || family == "renyi") out["alpha"] = alpha;
      std::cout << out.dump() << '\n';
    } else {
      std::cout << format_number(r.value);
      if (r.monte_carlo) std::cout << " +- " << format_number(r.std_error);
      std::cout << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational f-divergence estimation and diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Experiment config")->required();
  run->add_option("--output", output, "Override experiment.output");

  auto* validate = app.add_subcommand("validate", "Check a config file and list every problem");
  validate->add_option("config", config_path, "Experiment config")->required();

  std::string family = "kl", q_text, p_text;
  double alpha = 0.5;
  bool json = false;
  auto* oracle = app.add_subcommand("oracle", "Exact divergence between two Gaussians");
  oracle->add_option("--family", family, "kl, alpha, chi2, hellinger or renyi")->required();
  oracle->add_option("--alpha", alpha, "Order for alpha and renyi families");
  oracle->add_option("--q", q_text, "Q as MEAN:VAR (comma lists for diagonal laws)")->required();
  oracle->add_option("--p", p_text, "P as MEAN:VAR (comma lists for diagonal laws)")->required();
  oracle->add_flag("--json", json, "Print a JSON object");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (*run) {
    std::optional<std::filesystem::path> override_dir;
    if (!output.empty()) override_dir = output;
    return run_config_file(config_path, std::cerr, override_dir);
  }
  if (*validate) return cmd_validate(config_path);
  return cmd_oracle(family, alpha, q_text, p_text, json);
}
