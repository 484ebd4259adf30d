// OpenMP kernels against their serial references, at attack-loop shapes:
// N nodes, K classes, d features.
//
//   OMP_NUM_THREADS=4 ./bench_kernels --benchmark_filter=Outer

#include <benchmark/benchmark.h>

#include <random>

#include "caattack/dataset.hpp"
#include "caattack/gradient.hpp"
#include "caattack/kernels.hpp"

namespace {

using namespace caatk;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Graph sbm(std::size_t n) {
  SbmConfig cfg;
  cfg.block_sizes.assign(7, n / 7);
  cfg.p_in = 14.0 / static_cast<double>(n);
  cfg.p_out = 0.5 / static_cast<double>(n);
  cfg.seed = 1;
  return stochastic_block_model(cfg);
}

template <Matrix (*F)(const Matrix&, const Matrix&, const Matrix&, const Matrix&)>
void BM_OuterSum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 7, 1), b = random_matrix(n, 7, 2);
  const Matrix c = random_matrix(n, 7, 3), d = random_matrix(n, 7, 4);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b, c, d));
}
BENCHMARK(BM_OuterSum<kernels::outer_sum_nt>)->Name("OuterSum/parallel")->Arg(500)->Arg(2000);
BENCHMARK(BM_OuterSum<kernels::reference::outer_sum_nt>)->Name("OuterSum/reference")->Arg(500)->Arg(2000);

template <Matrix (*F)(const Matrix&, const Matrix&)>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 300, 1), b = random_matrix(300, 7, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
}
BENCHMARK(BM_Matmul<kernels::matmul>)->Name("Matmul/parallel")->Arg(500)->Arg(2000);
BENCHMARK(BM_Matmul<kernels::reference::matmul>)->Name("Matmul/reference")->Arg(500)->Arg(2000);

template <Matrix (*F)(const CsrMatrix&, const Matrix&)>
void BM_Spmm(benchmark::State& state) {
  const Graph g = sbm(static_cast<std::size_t>(state.range(0)));
  const auto adj = normalize_adjacency(g);
  const Matrix b = random_matrix(g.n_nodes(), 16, 3);
  for (auto _ : state) benchmark::DoNotOptimize(F(adj.matrix, b));
}
BENCHMARK(BM_Spmm<kernels::spmm>)->Name("Spmm/parallel")->Arg(700)->Arg(2100);
BENCHMARK(BM_Spmm<kernels::reference::spmm>)->Name("Spmm/reference")->Arg(700)->Arg(2100);

template <Matrix (*F)(const Matrix&, const CsrMatrix&, std::span<const double>)>
void BM_NormBackward(benchmark::State& state) {
  const Graph g = sbm(static_cast<std::size_t>(state.range(0)));
  const auto adj = normalize_adjacency(g);
  const Matrix gbar = random_matrix(g.n_nodes(), g.n_nodes(), 5);
  for (auto _ : state) benchmark::DoNotOptimize(F(gbar, adj.matrix, adj.degree));
}
BENCHMARK(BM_NormBackward<kernels::normalization_backward>)->Name("NormBackward/parallel")->Arg(700)->Arg(2100);
BENCHMARK(BM_NormBackward<kernels::reference::normalization_backward>)
    ->Name("NormBackward/reference")
    ->Arg(700)
    ->Arg(2100);

template <Matrix (*F)(const Matrix&)>
void BM_Symmetrize(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix m = random_matrix(n, n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(F(m));
}
BENCHMARK(BM_Symmetrize<kernels::symmetrize_zero_diagonal>)->Name("Symmetrize/parallel")->Arg(2000);
BENCHMARK(BM_Symmetrize<kernels::reference::symmetrize_zero_diagonal>)->Name("Symmetrize/reference")->Arg(2000);

// One full attack-gradient evaluation (parallel kernels only).
void BM_AttackGradient(benchmark::State& state) {
  const Graph g = sbm(static_cast<std::size_t>(state.range(0)));
  const auto p = train_surrogate(g, {});
  const auto labels = pseudo_labels(p, g);
  LossSpec spec;
  spec.ca = CAWeightParams{};
  for (auto _ : state) benchmark::DoNotOptimize(attack_gradient(g, p, spec, labels));
  state.counters["threads"] = kernels::max_threads();
}
BENCHMARK(BM_AttackGradient)->Arg(700)->Arg(2100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
