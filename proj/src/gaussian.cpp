#include "divgauge/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "divgauge/errors.hpp"

namespace divgauge {

GaussianSpec::GaussianSpec(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size() || mean_.size() == 0) {
    throw FactorizationError("covariance shape does not match mean");
  }
  if (!cov_.isApprox(cov_.transpose(), 1e-12)) throw FactorizationError("covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) throw FactorizationError("covariance is not positive definite");
  chol_ = llt.matrixL();
  for (Eigen::Index i = 0; i < chol_.rows(); ++i) {
    if (!(chol_(i, i) > 0.0) || !std::isfinite(chol_(i, i))) {
      throw FactorizationError("covariance is not positive definite");
    }
    log_det_ += 2.0 * std::log(chol_(i, i));
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols()));
  const Eigen::MatrixXd off = cov_ - Eigen::MatrixXd(cov_.diagonal().asDiagonal());
  diagonal_ = off.cwiseAbs().maxCoeff() == 0.0;
}

GaussianSpec GaussianSpec::isotropic(std::size_t dim, double mean, double variance) {
  const auto d = static_cast<Eigen::Index>(dim);
  return GaussianSpec(Eigen::VectorXd::Constant(d, mean), Eigen::MatrixXd::Identity(d, d) * variance);
}

GaussianSpec GaussianSpec::diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances) {
  return GaussianSpec(mean, Eigen::MatrixXd(variances.asDiagonal()));
}

double GaussianSpec::log_density(std::span<const double> x) const {
  const auto d = mean_.size();
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
  const Eigen::VectorXd diff = xv - mean_;
  const double quad = diff.dot(precision_ * diff);
  return -0.5 * (quad + log_det_ + static_cast<double>(d) * std::log(2.0 * std::numbers::pi));
}

double GaussianSpec::log_density(double x) const {
  const double var = cov_(0, 0);
  const double diff = x - mean_(0);
  return -0.5 * (diff * diff / var + std::log(2.0 * std::numbers::pi * var));
}

GaussianSpec GaussianSpec::marginal(std::size_t i) const {
  const auto k = static_cast<Eigen::Index>(i);
  return GaussianSpec::scalar(mean_(k), cov_(k, k));
}

bool GaussianSpec::operator==(const GaussianSpec& other) const {
  return mean_.size() == other.mean_.size() && mean_ == other.mean_ && cov_ == other.cov_;
}

SampleMatrix sample_gaussian(const GaussianSpec& spec, std::size_t n, Stream& stream) {
  const std::size_t d = spec.dim();
  SampleMatrix out(n, d);
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  const Eigen::MatrixXd& l = spec.cholesky_factor();
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = stream.normal();
    auto row = out.row(i);
    if (spec.is_diagonal()) {
      for (std::size_t k = 0; k < d; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        row[k] = spec.mean()(kk) + l(kk, kk) * z(kk);
      }
    } else {
      const Eigen::VectorXd x = spec.mean() + l.triangularView<Eigen::Lower>() * z;
      for (std::size_t k = 0; k < d; ++k) row[k] = x(static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

double log_density_ratio(const GaussianSpec& q, const GaussianSpec& p, std::span<const double> x) {
  return q.log_density(x) - p.log_density(x);
}

}  // namespace divgauge
