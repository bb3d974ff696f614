#include <benchmark/benchmark.h>

#include "dcrr/rankloss.hpp"

using namespace dcrr;

namespace {

Shard make_shard(std::size_t n, std::size_t p) {
  const Dataset d = sample_dataset(DesignSpec{p, Covariance::autoregressive(0.5), 1}, ErrorLaw::Normal,
                                   make_beta_star(p), n);
  return Shard(d.X, d.y, 1);
}

void BM_LocalGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const Shard shard = make_shard(n, p);
  const SmoothedLoss sl(EpanechnikovKernel{}, 1.0);
  Vector beta = make_beta_star(p).beta_star * 0.9;
  Vector g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(local_loss_and_gradient(shard, sl, beta, g));
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * (n - 1) / 2));
}
BENCHMARK(BM_LocalGradient)->Args({100, 1000})->Args({500, 1000})->Args({1500, 200});

void BM_PairwiseScores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SmoothedLoss sl(GaussianKernel{}, 1.0);
  Vector e = make_shard(n, 10).y();
  std::vector<double> scores(n);
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_loss_and_scores({e.data(), n}, sl, scores));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * (n - 1) / 2));
}
BENCHMARK(BM_PairwiseScores)->Arg(100)->Arg(1000);

}  // namespace
