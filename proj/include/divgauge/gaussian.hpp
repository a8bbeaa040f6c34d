#pragma once

#include <Eigen/Dense>
#include <span>

#include "divgauge/rng.hpp"
#include "divgauge/samples.hpp"

namespace divgauge {

// Multivariate normal N(mean, cov). Construction validates positive
// definiteness through a Cholesky factorization (FactorizationError).
class GaussianSpec {
 public:
  GaussianSpec(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  static GaussianSpec isotropic(std::size_t dim, double mean, double variance);
  static GaussianSpec diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances);
  static GaussianSpec scalar(double mean, double variance) { return isotropic(1, mean, variance); }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
  bool is_diagonal() const { return diagonal_; }
  double log_det() const { return log_det_; }

  double log_density(std::span<const double> x) const;
  double log_density(double x) const;  // 1-D convenience

  // Marginal of one coordinate (valid for any covariance).
  GaussianSpec marginal(std::size_t i) const;

  bool operator==(const GaussianSpec& other) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  Eigen::MatrixXd precision_;
  double log_det_ = 0.0;
  bool diagonal_ = false;
};

// n i.i.d. draws as rows: mean + L z with L the Cholesky factor.
SampleMatrix sample_gaussian(const GaussianSpec& spec, std::size_t n, Stream& stream);

// log(dQ/dP)(x).
double log_density_ratio(const GaussianSpec& q, const GaussianSpec& p, std::span<const double> x);

}  // namespace divgauge
