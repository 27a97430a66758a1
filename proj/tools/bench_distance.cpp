// Microbenchmark for the distance kernels: scalar reference vs the
// runtime-dispatched variant, at the feature widths the datasets use.
// Build target exists only when Google Benchmark is installed.

#include <benchmark/benchmark.h>

#include <vector>

#include "poisonguard/rng.hpp"
#include "poisonguard/simd/distance.hpp"

namespace {

std::vector<float> random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  pg::rng::Stream stream(seed);
  std::vector<float> m(rows * dim);
  for (auto& v : m) v = static_cast<float>(stream.uniform() * 4.0 - 2.0);
  return m;
}

void bench_scalar(benchmark::State& state) {
  const std::size_t rows = 4096;
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  std::vector<float> points = random_matrix(rows, dim, 1);
  std::vector<float> query = random_matrix(1, dim, 2);
  std::vector<float> out(rows);
  for (auto _ : state) {
    for (std::size_t r = 0; r < rows; ++r)
      out[r] = pg::simd::squared_distance_scalar(query.data(), points.data() + r * dim, dim);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * rows);
}

void bench_dispatched(benchmark::State& state) {
  const std::size_t rows = 4096;
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  std::vector<float> points = random_matrix(rows, dim, 1);
  std::vector<float> query = random_matrix(1, dim, 2);
  std::vector<float> out(rows);
  for (auto _ : state) {
    pg::simd::squared_distances(query.data(), points.data(), rows, dim, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * rows);
  state.SetLabel(pg::simd::active_kernel_name());
}

}  // namespace

BENCHMARK(bench_scalar)->Arg(3)->Arg(6)->Arg(12)->Arg(64);
BENCHMARK(bench_dispatched)->Arg(3)->Arg(6)->Arg(12)->Arg(64);

BENCHMARK_MAIN();
