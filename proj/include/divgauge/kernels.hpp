#pragma once

#include <span>

#include "divgauge/function_space.hpp"

namespace divgauge::kernels {

// Rows are processed in fixed chunks whose partial gradients are reduced in
// chunk order, so the parallel results do not depend on the thread count.
inline constexpr std::size_t kChunkRows = 64;

// Raw network output g (before the output transform).
void mlp_forward_serial(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                        std::span<double> out);
void mlp_forward_parallel(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                          std::span<double> out);

// grad += sum_i upstream[i] * d g(x_i) / d params
void mlp_backward_serial(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                         std::span<const double> upstream, std::span<double> grad);
void mlp_backward_parallel(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                           std::span<const double> upstream, std::span<double> grad);

}  // namespace divgauge::kernels
