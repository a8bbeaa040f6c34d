#include "divgauge/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "divgauge/errors.hpp"

namespace divgauge::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

void check_shapes(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x) {
  if (params.size() != spec.param_count()) throw DomainError("parameter vector has the wrong length");
  if (x.cols() != spec.input_dim) throw DomainError("sample dimension does not match the network input");
}

// Serial reference: one row at a time, plain loops.
double forward_row(const std::vector<LayerSlice>& layout, std::span<const double> params,
                   std::span<const double> x, std::vector<std::vector<double>>& acts) {
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& s = layout[l];
    auto& next = acts[l + 1];
    next.assign(s.out, 0.0);
    const bool hidden = l + 1 < layout.size();
    for (std::size_t o = 0; o < s.out; ++o) {
      double z = params[s.bias_offset + o];
      for (std::size_t i = 0; i < s.in; ++i) z += params[s.weight_offset + o * s.in + i] * acts[l][i];
      next[o] = hidden ? std::max(z, 0.0) : z;
    }
  }
  return acts.back()[0];
}

// acts[l] holds the output of layer l-1 (acts[0] unused; the input is mapped).
void forward_chunk(const std::vector<LayerSlice>& layout, std::span<const double> params, const double* x,
                   std::size_t rows, std::size_t dim, std::vector<RowMat>& acts) {
  acts.resize(layout.size() + 1);
  ConstRowMap input(x, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& s = layout[l];
    ConstRowMap w(params.data() + s.weight_offset, static_cast<Eigen::Index>(s.out), static_cast<Eigen::Index>(s.in));
    ConstVecMap b(params.data() + s.bias_offset, static_cast<Eigen::Index>(s.out));
    RowMat& z = acts[l + 1];
    if (l == 0) {
      z.noalias() = input * w.transpose();
    } else {
      z.noalias() = acts[l] * w.transpose();
    }
    z.rowwise() += b.transpose();
    if (l + 1 < layout.size()) z = z.cwiseMax(0.0);
  }
}

}  // namespace

void mlp_forward_serial(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                        std::span<double> out) {
  check_shapes(spec, params, x);
  if (out.size() != x.rows()) throw DomainError("output span has the wrong length");
  const auto layout = layer_layout(spec);
  std::vector<std::vector<double>> acts(layout.size() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = forward_row(layout, params, x.row(r), acts);
}

void mlp_backward_serial(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                         std::span<const double> upstream, std::span<double> grad) {
  check_shapes(spec, params, x);
  if (upstream.size() != x.rows() || grad.size() != params.size()) throw DomainError("gradient spans have the wrong length");
  const auto layout = layer_layout(spec);
  std::vector<std::vector<double>> acts(layout.size() + 1);
  std::vector<double> delta, prev;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    forward_row(layout, params, x.row(r), acts);
    delta.assign(1, upstream[r]);
    for (std::size_t l = layout.size(); l-- > 0;) {
      const auto& s = layout[l];
      for (std::size_t o = 0; o < s.out; ++o) {
        grad[s.bias_offset + o] += delta[o];
        for (std::size_t i = 0; i < s.in; ++i) grad[s.weight_offset + o * s.in + i] += delta[o] * acts[l][i];
      }
      if (l == 0) break;
      prev.assign(s.in, 0.0);
      for (std::size_t i = 0; i < s.in; ++i) {
        if (acts[l][i] <= 0.0) continue;
        double v = 0.0;
        for (std::size_t o = 0; o < s.out; ++o) v += params[s.weight_offset + o * s.in + i] * delta[o];
        prev[i] = v;
      }
      delta.swap(prev);
    }
  }
}

void mlp_forward_parallel(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                          std::span<double> out) {
  check_shapes(spec, params, x);
  if (out.size() != x.rows()) throw DomainError("output span has the wrong length");
  const auto layout = layer_layout(spec);
  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();
  const auto chunks = static_cast<long>((n + kChunkRows - 1) / kChunkRows);
#pragma omp parallel
  {
    std::vector<RowMat> acts;
#pragma omp for schedule(static)
    for (long c = 0; c < chunks; ++c) {
      const std::size_t r0 = static_cast<std::size_t>(c) * kChunkRows;
      const std::size_t rows = std::min(kChunkRows, n - r0);
      forward_chunk(layout, params, x.data().data() + r0 * dim, rows, dim, acts);
      for (std::size_t r = 0; r < rows; ++r) out[r0 + r] = acts.back()(static_cast<Eigen::Index>(r), 0);
    }
  }
}

void mlp_backward_parallel(const MlpSpec& spec, std::span<const double> params, const SampleMatrix& x,
                           std::span<const double> upstream, std::span<double> grad) {
  check_shapes(spec, params, x);
  if (upstream.size() != x.rows() || grad.size() != params.size()) throw DomainError("gradient spans have the wrong length");
  const auto layout = layer_layout(spec);
  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();
  const std::size_t np = params.size();
  const auto chunks = static_cast<long>((n + kChunkRows - 1) / kChunkRows);
  std::vector<double> partial(static_cast<std::size_t>(chunks) * np, 0.0);
#pragma omp parallel
  {
    std::vector<RowMat> acts;
    RowMat delta, prev;
#pragma omp for schedule(static)
    for (long c = 0; c < chunks; ++c) {
      const std::size_t r0 = static_cast<std::size_t>(c) * kChunkRows;
      const std::size_t rows = std::min(kChunkRows, n - r0);
      const double* xr = x.data().data() + r0 * dim;
      forward_chunk(layout, params, xr, rows, dim, acts);
      double* g = partial.data() + static_cast<std::size_t>(c) * np;
      const auto erows = static_cast<Eigen::Index>(rows);
      delta = Eigen::Map<const RowMat>(upstream.data() + r0, erows, 1);
      for (std::size_t l = layout.size(); l-- > 0;) {
        const auto& s = layout[l];
        const auto eout = static_cast<Eigen::Index>(s.out);
        const auto ein = static_cast<Eigen::Index>(s.in);
        RowMap gw(g + s.weight_offset, eout, ein);
        Eigen::Map<Eigen::RowVectorXd> gb(g + s.bias_offset, eout);
        if (l == 0) {
          gw.noalias() += delta.transpose() * ConstRowMap(xr, erows, ein);
        } else {
          gw.noalias() += delta.transpose() * acts[l];
        }
        gb += delta.colwise().sum();
        if (l == 0) break;
        ConstRowMap w(params.data() + s.weight_offset, eout, ein);
        prev.noalias() = delta * w;
        delta = prev.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
      }
    }
  }
  for (long c = 0; c < chunks; ++c) {
    const double* g = partial.data() + static_cast<std::size_t>(c) * np;
    for (std::size_t k = 0; k < np; ++k) grad[k] += g[k];
  }
}

}  // namespace divgauge::kernels
