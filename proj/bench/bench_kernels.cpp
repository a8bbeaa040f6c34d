#include <benchmark/benchmark.h>

#include <vector>

#include "divgauge/kernels.hpp"
#include "divgauge/rng.hpp"

using namespace divgauge;

namespace {

struct Fixture {
  MlpSpec spec;
  std::vector<double> params;
  SampleMatrix x;
  std::vector<double> upstream;

  Fixture(std::size_t dim, std::size_t hidden, std::size_t rows) : x(rows, dim), upstream(rows, 1.0 / rows) {
    spec.input_dim = dim;
    spec.hidden = {hidden};
    Stream s(1, StreamRole::kAux);
    params.resize(spec.param_count());
    for (auto& p : params) p = 0.1 * s.normal();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < dim; ++j) x(i, j) = s.normal();
    }
  }
};

template <bool Parallel>
void BM_Forward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 64, static_cast<std::size_t>(state.range(1)));
  std::vector<double> out(f.x.rows());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::mlp_forward_parallel(f.spec, f.params, f.x, out);
    } else {
      kernels::mlp_forward_serial(f.spec, f.params, f.x, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <bool Parallel>
void BM_Backward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 64, static_cast<std::size_t>(state.range(1)));
  std::vector<double> grad(f.params.size());
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    if constexpr (Parallel) {
      kernels::mlp_backward_parallel(f.spec, f.params, f.x, f.upstream, grad);
    } else {
      kernels::mlp_backward_serial(f.spec, f.params, f.x, f.upstream, grad);
    }
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void Shapes(benchmark::internal::Benchmark* b) {
  for (long dim : {40L, 784L}) {
    for (long rows : {100L, 10000L}) b->Args({dim, rows});
  }
}

}  // namespace

BENCHMARK(BM_Forward<false>)->Name("forward/serial")->Apply(Shapes);
BENCHMARK(BM_Forward<true>)->Name("forward/parallel")->Apply(Shapes);
BENCHMARK(BM_Backward<false>)->Name("backward/serial")->Apply(Shapes);
BENCHMARK(BM_Backward<true>)->Name("backward/parallel")->Apply(Shapes);

BENCHMARK_MAIN();
