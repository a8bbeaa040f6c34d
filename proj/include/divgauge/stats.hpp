#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace divgauge {

// Expectations under a (possibly weighted) empirical measure. An empty weight
// span means uniform weights 1/n; otherwise weights must sum to one.
double weighted_mean(std::span<const double> values, std::span<const double> weights);
double weighted_variance(std::span<const double> values, std::span<const double> weights);

// log E[exp(scale * v)] under the weighted empirical measure, computed with a
// max shift. When `tilt` is non-empty it receives the normalized tilted
// weights w_i e^{scale v_i} / sum_j w_j e^{scale v_j}.
double log_mean_exp(std::span<const double> values, std::span<const double> weights, double scale = 1.0,
                    std::span<double> tilt = {});

// Same, for values already in log space: log sum_i w_i exp(log_terms_i).
double log_weighted_sum_exp(std::span<const double> log_terms, std::span<const double> weights);

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanAndError mean_and_standard_error(std::span<const double> values);
double sample_variance(std::span<const double> values);
double median(std::vector<double> values);

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace divgauge
