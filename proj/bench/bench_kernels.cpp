// Serial reference kernels against their OpenMP counterparts.
//   ./fkan_bench --benchmark_filter=KanForward

#include <benchmark/benchmark.h>

#include "fkan/kernels.hpp"
#include "fkan/rng.hpp"

namespace {

using namespace fkan;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal(0.0, scale);
  return m;
}

const SplineGrid kGrid = SplineGrid::uniform(3, 5, -1.0, 1.0);

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 50, 1), b = random_matrix(50, 50, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::matmul(a, b));
}
void BM_MatmulOmp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 50, 1), b = random_matrix(50, 50, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::matmul(a, b));
}

// One [25 -> 50] KAN layer, the widest in the default architecture.
void BM_KanForwardSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 25, 3, 0.5), base = random_matrix(50, 25, 4, 0.2);
  const Matrix coeffs = random_matrix(50 * 25, kGrid.basis_count(), 5, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::kan_forward(x, base, coeffs, kGrid));
}
void BM_KanForwardOmp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 25, 3, 0.5), base = random_matrix(50, 25, 4, 0.2);
  const Matrix coeffs = random_matrix(50 * 25, kGrid.basis_count(), 5, 0.1);
  for (auto _ : state) {
    kernels::KanCache cache;
    benchmark::DoNotOptimize(kernels::omp::kan_forward(x, base, coeffs, kGrid, &cache));
  }
}

void BM_KanBackwardSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 25, 3, 0.5), base = random_matrix(50, 25, 4, 0.2);
  const Matrix coeffs = random_matrix(50 * 25, kGrid.basis_count(), 5, 0.1);
  const Matrix dy = random_matrix(n, 50, 6);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::kan_backward(x, dy, base, coeffs, kGrid, true));
}
void BM_KanBackwardOmp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 25, 3, 0.5), base = random_matrix(50, 25, 4, 0.2);
  const Matrix coeffs = random_matrix(50 * 25, kGrid.basis_count(), 5, 0.1);
  const Matrix dy = random_matrix(n, 50, 6);
  kernels::KanCache cache;
  kernels::omp::kan_forward(x, base, coeffs, kGrid, &cache);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::kan_backward(cache, dy, base, coeffs, kGrid, true));
}

// Aggregation over K = 20 clients of a KAN-sized parameter vector.
constexpr std::size_t kDims = 16000;

void BM_TrimmedMeanSerial(benchmark::State& state) {
  const Matrix stack = random_matrix(static_cast<std::size_t>(state.range(0)), kDims, 7);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::coordinate_trimmed_mean(stack, 4));
}
void BM_TrimmedMeanOmp(benchmark::State& state) {
  const Matrix stack = random_matrix(static_cast<std::size_t>(state.range(0)), kDims, 7);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::coordinate_trimmed_mean(stack, 4));
}

void BM_MedianSerial(benchmark::State& state) {
  const Matrix stack = random_matrix(static_cast<std::size_t>(state.range(0)), kDims, 8);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::coordinate_median(stack));
}
void BM_MedianOmp(benchmark::State& state) {
  const Matrix stack = random_matrix(static_cast<std::size_t>(state.range(0)), kDims, 8);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::coordinate_median(stack));
}

void BM_PairwiseSerial(benchmark::State& state) {
  const Matrix stack = random_matrix(static_cast<std::size_t>(state.range(0)), kDims, 9);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::pairwise_sq_distances(stack));
}
void BM_PairwiseOmp(benchmark::State& state) {
  const Matrix stack = random_matrix(static_cast<std::size_t>(state.range(0)), kDims, 9);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::pairwise_sq_distances(stack));
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_MatmulOmp)->Arg(64)->Arg(1024);
BENCHMARK(BM_KanForwardSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_KanForwardOmp)->Arg(64)->Arg(1024);
BENCHMARK(BM_KanBackwardSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_KanBackwardOmp)->Arg(64)->Arg(1024);
BENCHMARK(BM_TrimmedMeanSerial)->Arg(20);
BENCHMARK(BM_TrimmedMeanOmp)->Arg(20);
BENCHMARK(BM_MedianSerial)->Arg(20);
BENCHMARK(BM_MedianOmp)->Arg(20);
BENCHMARK(BM_PairwiseSerial)->Arg(20);
BENCHMARK(BM_PairwiseOmp)->Arg(20);

BENCHMARK_MAIN();
