#include "divgauge/stats.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#include "divgauge/samples.hpp"

namespace divgauge {

namespace {

inline double weight_at(std::span<const double> weights, std::size_t i, double uniform) {
  return weights.empty() ? uniform : weights[i];
}

}  // namespace

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  assert(weights.empty() || weights.size() == values.size());
  const double uniform = 1.0 / static_cast<double>(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += weight_at(weights, i, uniform) * values[i];
  return sum;
}

double weighted_variance(std::span<const double> values, std::span<const double> weights) {
  const double mean = weighted_mean(values, weights);
  const double uniform = 1.0 / static_cast<double>(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sum += weight_at(weights, i, uniform) * d * d;
  }
  return sum;
}

double log_mean_exp(std::span<const double> values, std::span<const double> weights, double scale,
                    std::span<double> tilt) {
  assert(!values.empty());
  double shift = -kInf;
  for (double v : values) shift = std::max(shift, scale * v);
  if (!std::isfinite(shift)) {
    if (!tilt.empty()) std::fill(tilt.begin(), tilt.end(), 0.0);
    return shift;
  }
  const double uniform = 1.0 / static_cast<double>(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double term = weight_at(weights, i, uniform) * std::exp(scale * values[i] - shift);
    if (!tilt.empty()) tilt[i] = term;
    sum += term;
  }
  if (!tilt.empty()) {
    for (double& t : tilt) t /= sum;
  }
  return shift + std::log(sum);
}

double log_weighted_sum_exp(std::span<const double> log_terms, std::span<const double> weights) {
  double shift = -kInf;
  for (double v : log_terms) shift = std::max(shift, v);
  if (!std::isfinite(shift)) return shift;
  const double uniform = 1.0 / static_cast<double>(log_terms.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < log_terms.size(); ++i) {
    sum += weight_at(weights, i, uniform) * std::exp(log_terms[i] - shift);
  }
  return shift + std::log(sum);
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

MeanAndError mean_and_standard_error(std::span<const double> values) {
  MeanAndError out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  out.std_error = std::sqrt(sample_variance(values) / static_cast<double>(values.size()));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

SampleMatrix SampleMatrix::gather(std::span<const std::size_t> indices) const {
  SampleMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

SampleMatrix SampleMatrix::hconcat(const SampleMatrix& a, const SampleMatrix& b) {
  assert(a.rows() == b.rows());
  SampleMatrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), dst.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

}  // namespace divgauge
