#include <benchmark/benchmark.h>

#include <memory>

#include "dcrr/solver.hpp"

using namespace dcrr;

namespace {

void BM_LassoSolve(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const Dataset d = sample_dataset(DesignSpec{p, Covariance::autoregressive(0.5), 2}, ErrorLaw::Normal,
                                   make_beta_star(p), 100);
  auto objective = std::make_shared<PairwiseObjective>(Shard(d.X, d.y, 1), SmoothedLoss(EpanechnikovKernel{}, 1.0));
  const Eigen::Index dim = static_cast<Eigen::Index>(p);
  const CompositeProblem problem{objective, Vector::Zero(dim), Vector::Constant(dim, 0.1)};
  const SolverConfig config;
  for (auto _ : state) {
    const SolveResult r = solve(problem, config, Vector::Zero(dim));
    benchmark::DoNotOptimize(r.beta.data());
    state.counters["iterations"] = static_cast<double>(r.iterations);
  }
}
BENCHMARK(BM_LassoSolve)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
