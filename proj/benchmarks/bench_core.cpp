// Microbenchmarks for the per-round hot paths: network passes, one full
// hypergradient estimate, window smoothing, and ledger serialization.

#include <benchmark/benchmark.h>

#include "smoothfbo/config.hpp"
#include "smoothfbo/drift.hpp"
#include "smoothfbo/funcgrad.hpp"
#include "smoothfbo/losses.hpp"
#include "smoothfbo/mlp.hpp"
#include "smoothfbo/models.hpp"
#include "smoothfbo/rng.hpp"
#include "smoothfbo/smoother.hpp"

namespace {

using namespace smoothfbo;

Vec64 random_vec(Rng& rng, int n) {
  Vec64 v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.gaussian();
  return v;
}

void BM_MlpForward(benchmark::State& state) {
  MlpShape shape{{8, 32, 32, 1}, Activation::kGelu};
  Rng rng(1);
  Mlp net = init_network({}, shape.dims, shape.hidden_activation, rng);
  Vec64 x = random_vec(rng, shape.input_dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x));
  }
}
BENCHMARK(BM_MlpForward);

void BM_MlpForwardBackward(benchmark::State& state) {
  MlpShape shape{{8, 32, 32, 1}, Activation::kGelu};
  Rng rng(1);
  Mlp net = init_network({}, shape.dims, shape.hidden_activation, rng);
  Vec64 x = random_vec(rng, shape.input_dim());
  Vec64 out_grad{1.0};
  Vec64 grad(shape.param_count(), 0.0);
  for (auto _ : state) {
    net.forward(x);
    net.backward(out_grad, 1.0, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_MlpForwardBackward);

void BM_FuncGradRound(benchmark::State& state) {
  ExperimentConfig cfg;
  BenchmarkProblem problem = cfg.make_problem();
  Rng root(1);
  RoundData data = sample_round(problem.schedule, root, 100, problem.dgp);
  auto h = problem.make_predictor(root, problem.h_init);
  auto a = problem.make_predictor(root, problem.a_init);
  Vec64 lambda(static_cast<std::size_t>(problem.dgp.window), 1.0);
  WeightedSquaredInnerLoss inner;
  SquaredOuterLoss outer;
  Rng stream = root.fork("bench");
  for (auto _ : state) {
    Hypergrad hg = func_grad(lambda, *h, *a, data, inner, outer, cfg.inner,
                             cfg.adjoint, 1.0, stream);
    benchmark::DoNotOptimize(hg.total.data());
  }
}
BENCHMARK(BM_FuncGradRound)->Unit(benchmark::kMillisecond);

void BM_WindowPush(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  HypergradWindow window(w, 5);
  Rng rng(1);
  Vec64 g = random_vec(rng, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(window.push_and_smooth(g));
  }
}
BENCHMARK(BM_WindowPush)->Arg(5)->Arg(50)->Arg(500);

void BM_LedgerToCsv(benchmark::State& state) {
  RegretLedger ledger(5, false);
  Rng rng(1);
  for (int t = 1; t <= 1000; ++t) {
    Vec64 g = random_vec(rng, 5);
    RoundStats stats;
    stats.outer_loss = rng.uniform01();
    ledger.blr_update(t, g, stats, random_vec(rng, 5));
  }
  for (auto _ : state) {
    std::string csv = ledger.to_csv();
    benchmark::DoNotOptimize(csv.data());
  }
}
BENCHMARK(BM_LedgerToCsv)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
