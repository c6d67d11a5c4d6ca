// Serial reference kernels against their OpenMP counterparts.

#include "msa/kernels.hpp"
#include "msa/rng.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

struct Problem {
  msa::RowMatrix x;
  msa::Vector y;
  std::vector<double> w;
  Eigen::MatrixXd params;
};

Problem make_problem(Eigen::Index n, Eigen::Index d) {
  msa::Rng rng(7);
  std::normal_distribution<double> g;
  Problem p{msa::RowMatrix(n, d), msa::Vector(n), std::vector<double>(static_cast<std::size_t>(n)),
            Eigen::MatrixXd(1, d + 1)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.x(i, j) = g(rng);
    p.y(i) = g(rng);
    p.w[static_cast<std::size_t>(i)] = 1.0 / static_cast<double>(n);
  }
  for (Eigen::Index j = 0; j <= d; ++j) p.params(0, j) = g(rng);
  return p;
}

template <bool Parallel>
void BM_WeightedGram(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1));
  for (auto _ : state) {
    auto s = Parallel ? msa::kernels::omp::weighted_gram(p.x, p.y, p.w, true)
                      : msa::kernels::serial::weighted_gram(p.x, p.y, p.w, true);
    benchmark::DoNotOptimize(s.xtx.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_LossObjective(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1));
  for (auto _ : state) {
    auto s = Parallel ? msa::kernels::omp::loss_objective(p.x, p.y, p.w, p.params, msa::LossKind::squared, true, 4.0)
                      : msa::kernels::serial::loss_objective(p.x, p.y, p.w, p.params, msa::LossKind::squared, true, 4.0);
    benchmark::DoNotOptimize(s.value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {1000L, 10000L, 100000L})
    for (long d : {10L, 100L}) b->Args({n, d});
}

}  // namespace

BENCHMARK(BM_WeightedGram<false>)->Name("weighted_gram/serial")->Apply(sizes);
BENCHMARK(BM_WeightedGram<true>)->Name("weighted_gram/omp")->Apply(sizes);
BENCHMARK(BM_LossObjective<false>)->Name("loss_objective/serial")->Apply(sizes);
BENCHMARK(BM_LossObjective<true>)->Name("loss_objective/omp")->Apply(sizes);

BENCHMARK_MAIN();
