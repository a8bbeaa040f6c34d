#pragma once

#include <functional>
#include <string>

namespace divgauge {

enum class FamilyKind { kKL, kAlpha, kChiSquared, kHellinger };

// Open interval (lower, upper) on which f* is finite and strictly convex.
struct Interval {
  double lower;
  double upper;
  bool contains(double y) const { return y > lower && y < upper; }
};

// Generator f of an f-divergence together with its Legendre transform f*.
//
// Extended-real values are IEEE doubles: +inf marks points outside the
// effective domain. Conventions:
//   KL           f(x) = x log x on [0, inf), f(0) = 0;      f*(y) = e^{y-1}
//   Alpha(a)     f(x) = (x^a - 1)/(a(a-1)) on [0, inf), a in (0,1) or (1,4]
//   ChiSquared   f(x) = (x^2 - 1)/2 on R;                  f*(y) = (y^2+1)/2
//   Hellinger    identical to Alpha(1/2)
class DivergenceFamily {
 public:
  static DivergenceFamily kl();
  static DivergenceFamily alpha(double a);
  static DivergenceFamily chi_squared();
  static DivergenceFamily hellinger();

  FamilyKind kind() const { return kind_; }
  // Meaningful for kAlpha and kHellinger.
  double alpha() const { return alpha_; }
  bool is_alpha_like() const { return kind_ == FamilyKind::kAlpha || kind_ == FamilyKind::kHellinger; }
  std::string name() const;

  double f(double x) const;
  double f_prime(double x) const;
  double f_star(double y) const;
  double f_star_d1(double y) const;
  double f_star_d2(double y) const;
  Interval domain_fstar() const;

  bool operator==(const DivergenceFamily&) const = default;

 private:
  DivergenceFamily(FamilyKind kind, double alpha) : kind_(kind), alpha_(alpha) {}

  FamilyKind kind_;
  double alpha_;
};

// The representative of the exact optimizer depends on which objective it is
// plugged into.
enum class OptimizerForm {
  kLegendre,     // phi* = f'(dQ/dP), for LT/shift/affine objectives
  kAlphaScale,   // phi* = (dQ/dP)^{alpha-1}, scale-invariant representative
  kRenyi,        // g* = log(dQ/dP)
};

// Maps a density-ratio value r = dQ/dP(x) to the optimizer value.
// Throws DomainError when r <= 0 and the form needs a positive ratio.
double optimizer_from_ratio(const DivergenceFamily& family, double ratio, OptimizerForm form);

std::function<double(double)> exact_optimizer(const DivergenceFamily& family,
                                              std::function<double(double)> density_ratio,
                                              OptimizerForm form = OptimizerForm::kLegendre);

}  // namespace divgauge
