#include "divgauge/divergence.hpp"

#include <cmath>
#include <sstream>

#include "divgauge/errors.hpp"
#include "divgauge/stats.hpp"

namespace divgauge {

DivergenceFamily DivergenceFamily::kl() { return {FamilyKind::kKL, 1.0}; }

DivergenceFamily DivergenceFamily::alpha(double a) {
  const bool ok = (a > 0.0 && a < 1.0) || (a > 1.0 && a <= 4.0);
  if (!ok || !std::isfinite(a)) {
    std::ostringstream msg;
    msg << "alpha must lie in (0,1) or (1,4], got " << a;
    throw DomainError(msg.str());
  }
  return {FamilyKind::kAlpha, a};
}

DivergenceFamily DivergenceFamily::chi_squared() { return {FamilyKind::kChiSquared, 2.0}; }

DivergenceFamily DivergenceFamily::hellinger() { return {FamilyKind::kHellinger, 0.5}; }

std::string DivergenceFamily::name() const {
  switch (kind_) {
    case FamilyKind::kKL:
      return "kl";
    case FamilyKind::kChiSquared:
      return "chi2";
    case FamilyKind::kHellinger:
      return "hellinger";
    case FamilyKind::kAlpha: {
      std::ostringstream s;
      s << "alpha(" << alpha_ << ")";
      return s.str();
    }
  }
  return "unknown";
}

double DivergenceFamily::f(double x) const {
  switch (kind_) {
    case FamilyKind::kKL:
      if (x < 0.0) return kInf;
      if (x == 0.0) return 0.0;
      return x * std::log(x);
    case FamilyKind::kChiSquared:
      return 0.5 * (x * x - 1.0);
    case FamilyKind::kAlpha:
    case FamilyKind::kHellinger:
      if (x < 0.0) return kInf;
      return (std::pow(x, alpha_) - 1.0) / (alpha_ * (alpha_ - 1.0));
  }
  return kNaN;
}

double DivergenceFamily::f_prime(double x) const {
  switch (kind_) {
    case FamilyKind::kKL:
      return x > 0.0 ? std::log(x) + 1.0 : -kInf;
    case FamilyKind::kChiSquared:
      return x;
    case FamilyKind::kAlpha:
    case FamilyKind::kHellinger:
      if (x <= 0.0) return alpha_ < 1.0 ? -kInf : 0.0;
      return std::pow(x, alpha_ - 1.0) / (alpha_ - 1.0);
  }
  return kNaN;
}

// For a in (0,1): f*(y) = C |y|^{-s} - 1/(a(1-a)) on y < 0, with
// s = a/(1-a) and C = a^{-1} (1-a)^{-s}.
// For a > 1: f*(y) = C y^{q} + 1/(a(a-1)) on y >= 0, with q = a/(a-1) and
// C = a^{-1} (a-1)^{q}; for y < 0 the supremum sits at x = 0 and f* is the
// constant 1/(a(a-1)).
double DivergenceFamily::f_star(double y) const {
  switch (kind_) {
    case FamilyKind::kKL:
      return std::exp(y - 1.0);
    case FamilyKind::kChiSquared:
      return 0.5 * (y * y + 1.0);
    case FamilyKind::kAlpha:
    case FamilyKind::kHellinger: {
      const double a = alpha_;
      if (a < 1.0) {
        if (y >= 0.0) return kInf;
        const double s = a / (1.0 - a);
        const double c = std::pow(1.0 - a, -s) / a;
        return c * std::pow(-y, -s) - 1.0 / (a * (1.0 - a));
      }
      const double base = 1.0 / (a * (a - 1.0));
      if (y <= 0.0) return base;
      const double q = a / (a - 1.0);
      const double c = std::pow(a - 1.0, q) / a;
      return c * std::pow(y, q) + base;
    }
  }
  return kNaN;
}

double DivergenceFamily::f_star_d1(double y) const {
  switch (kind_) {
    case FamilyKind::kKL:
      return std::exp(y - 1.0);
    case FamilyKind::kChiSquared:
      return y;
    case FamilyKind::kAlpha:
    case FamilyKind::kHellinger: {
      const double a = alpha_;
      if (a < 1.0) {
        if (y >= 0.0) return kInf;
        const double s = a / (1.0 - a);
        const double c = std::pow(1.0 - a, -s) / a;
        return c * s * std::pow(-y, -s - 1.0);
      }
      if (y <= 0.0) return 0.0;
      const double q = a / (a - 1.0);
      const double c = std::pow(a - 1.0, q) / a;
      return c * q * std::pow(y, q - 1.0);
    }
  }
  return kNaN;
}

double DivergenceFamily::f_star_d2(double y) const {
  switch (kind_) {
    case FamilyKind::kKL:
      return std::exp(y - 1.0);
    case FamilyKind::kChiSquared:
      return 1.0;
    case FamilyKind::kAlpha:
    case FamilyKind::kHellinger: {
      const double a = alpha_;
      if (a < 1.0) {
        if (y >= 0.0) return kInf;
        const double s = a / (1.0 - a);
        const double c = std::pow(1.0 - a, -s) / a;
        return c * s * (s + 1.0) * std::pow(-y, -s - 2.0);
      }
      if (y <= 0.0) return 0.0;
      const double q = a / (a - 1.0);
      const double c = std::pow(a - 1.0, q) / a;
      return c * q * (q - 1.0) * std::pow(y, q - 2.0);
    }
  }
  return kNaN;
}

Interval DivergenceFamily::domain_fstar() const {
  switch (kind_) {
    case FamilyKind::kKL:
    case FamilyKind::kChiSquared:
      return {-kInf, kInf};
    case FamilyKind::kAlpha:
    case FamilyKind::kHellinger:
      return alpha_ < 1.0 ? Interval{-kInf, 0.0} : Interval{0.0, kInf};
  }
  return {kNaN, kNaN};
}

double optimizer_from_ratio(const DivergenceFamily& family, double ratio, OptimizerForm form) {
  const bool needs_positive = form != OptimizerForm::kLegendre || family.kind() != FamilyKind::kChiSquared;
  if (needs_positive && !(ratio > 0.0)) {
    std::ostringstream msg;
    msg << "density ratio must be positive for " << family.name() << ", got " << ratio;
    throw DomainError(msg.str());
  }
  switch (form) {
    case OptimizerForm::kLegendre:
      return family.f_prime(ratio);
    case OptimizerForm::kAlphaScale:
      if (!family.is_alpha_like() && family.kind() != FamilyKind::kChiSquared) {
        throw DomainError("alpha-scale optimizer requires an alpha family");
      }
      return std::pow(ratio, family.alpha() - 1.0);
    case OptimizerForm::kRenyi:
      return std::log(ratio);
  }
  return kNaN;
}

std::function<double(double)> exact_optimizer(const DivergenceFamily& family,
                                              std::function<double(double)> density_ratio,
                                              OptimizerForm form) {
  return [family, ratio = std::move(density_ratio), form](double x) {
    return optimizer_from_ratio(family, ratio(x), form);
  };
}

}  // namespace divgauge
