#include <vector>

#include <benchmark/benchmark.h>

#include "mnn/graph.hpp"
#include "mnn/network.hpp"
#include "mnn/spectral.hpp"

using namespace mnn;

namespace {

LaplacianOperator sphere_operator(std::size_t n, StorageMode storage) {
  const auto m = ManifoldModel::sphere2();
  const auto pts = sample_uniform(m, n, 1);
  return build_laplacian(pts,
                         {KernelKind::gaussian, 2, scale_parameter(n, 2, 0.5),
                          calibration_constant(KernelKind::gaussian, 2, m.volume())},
                         {storage});
}

void BM_MatvecDense(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto op = sphere_operator(n, StorageMode::cached_dense);
  std::vector<double> x(n, 1.0), y(n);
  for (auto _ : state) {
    op.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}
BENCHMARK(BM_MatvecDense)->Arg(1024)->Arg(4096);

void BM_MatvecOnTheFly(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto op = sphere_operator(n, StorageMode::on_the_fly);
  std::vector<double> x(n, 1.0), y(n);
  for (auto _ : state) {
    op.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}
BENCHMARK(BM_MatvecOnTheFly)->Arg(1024)->Arg(4096);

void BM_BuildDense(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sphere_operator(n, StorageMode::cached_dense));
}
BENCHMARK(BM_BuildDense)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_Lanczos(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto op = sphere_operator(n, StorageMode::cached_dense);
  for (auto _ : state) benchmark::DoNotOptimize(smallest_eigenpairs(op, 9));
}
BENCHMARK(BM_Lanczos)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_ForwardDiscrete(benchmark::State& state) {
  const std::size_t n = 4096;
  const auto m = ManifoldModel::sphere2();
  const auto pts = sample_uniform(m, n, 2);
  const auto op = build_laplacian(pts, {KernelKind::gaussian, 2, scale_parameter(n, 2, 0.5),
                                        calibration_constant(KernelKind::gaussian, 2, m.volume())});
  const auto eig = smallest_eigenpairs(op, 9);
  const std::vector<BandlimitedSignal> f{BandlimitedSignal{std::vector<double>(9, 1.0)}};
  const auto x = project_inputs(f, m, pts);
  const auto net = NetworkSpec::uniform({1, 4, 4, 1}, SpectralFilter::exponential(), Nonlinearity::abs);
  for (auto _ : state) benchmark::DoNotOptimize(forward_discrete(net, eig, x));
}
BENCHMARK(BM_ForwardDiscrete)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
