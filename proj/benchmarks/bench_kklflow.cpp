#include <benchmark/benchmark.h>

#include "kklflow/kkl.hpp"
#include "kklflow/metrics.hpp"
#include "kklflow/mmd.hpp"
#include "kklflow/rng.hpp"
#include "kklflow/spectral.hpp"

using namespace kklflow;

namespace {

DiscreteMeasure cloud(int n, int d, std::uint64_t stream) {
  RngStream rng(12345, stream);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = rng.normal();
  return DiscreteMeasure::uniform(std::move(pts));
}

void BM_sym_eig(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  RngStream rng(7, 0);
  Eigen::MatrixXd b(r, r);
  for (int i = 0; i < r * r; ++i) b.data()[i] = rng.normal();
  Eigen::MatrixXd m = b * b.transpose() / r;
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(m));
}
BENCHMARK(BM_sym_eig)->Arg(64)->Arg(128)->Arg(256)->Arg(512);

void BM_kkl_alpha(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto p = cloud(n, 2, 1);
  auto q = cloud(n, 2, 2);
  KernelSpec k = KernelSpec::gaussian(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(kkl_alpha(p, q, k, 0.1));
}
BENCHMARK(BM_kkl_alpha)->Arg(25)->Arg(50)->Arg(100)->Arg(200);

void BM_gradient_eval(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto p = cloud(n, 2, 3);
  auto q = cloud(n, 2, 4);
  KernelSpec k = KernelSpec::gaussian(0.5);
  for (auto _ : state) {
    SpectralCache cache = build_spectral_cache(p, q, k, 0.05);
    benchmark::DoNotOptimize(wasserstein_gradient_at_atoms(cache));
  }
}
BENCHMARK(BM_gradient_eval)->Arg(50)->Arg(100)->Arg(200);

void BM_mmd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto p = cloud(n, 2, 5);
  auto q = cloud(n, 2, 6);
  KernelSpec k = KernelSpec::gaussian(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(mmd_squared(p, q, k));
}
BENCHMARK(BM_mmd)->Arg(100)->Arg(500);

void BM_wasserstein2(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto p = cloud(n, 2, 7);
  auto q = cloud(n, 2, 8);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein2(p, q));
}
BENCHMARK(BM_wasserstein2)->Arg(50)->Arg(100)->Arg(250);

}  // namespace

BENCHMARK_MAIN();
