// Serial vs OpenMP throughput for the data-parallel kernels. Both modes
// produce identical bits (asserted in the test suite); this target measures
// what the parallel paths buy.

#include <benchmark/benchmark.h>

#include "feedrank/eval.hpp"
#include "feedrank/model.hpp"
#include "feedrank/reranker.hpp"
#include "feedrank/rng.hpp"
#include "feedrank/simgen.hpp"

using namespace feedrank;

namespace {

std::vector<Vec> random_rows(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> rows(static_cast<std::size_t>(n));
  for (Vec& row : rows) {
    row.resize(static_cast<std::size_t>(dim));
    for (double& x : row) x = rng.uniform(-1.0, 1.0);
  }
  return rows;
}

ExecMode mode_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecMode::serial : ExecMode::parallel;
}

void BM_forward_batch(benchmark::State& state) {
  const ScorerModel model =
      init_model(22, {64, 32}, 2, FeatureMode::contextual, 11);
  const std::vector<Vec> rows = random_rows(4096, 22, 12);
  std::vector<Vec> out;
  for (auto _ : state) {
    forward_batch(model, rows, out, mode_of(state));
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows.size()));
}

void BM_loss_and_gradient(benchmark::State& state) {
  const ScorerModel model =
      init_model(22, {64, 32}, 2, FeatureMode::contextual, 21);
  const std::vector<Vec> rows = random_rows(1024, 22, 22);
  Rng rng(23);
  std::vector<std::vector<int>> labels(rows.size(), std::vector<int>(2));
  for (auto& l : labels) {
    l[0] = rng.bernoulli(0.5);
    l[1] = rng.bernoulli(0.5);
  }
  Vec grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        loss_and_gradient(model, rows, labels, grad, mode_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows.size()));
}

void BM_simulate_sessions(benchmark::State& state) {
  WorldConfig cfg;
  cfg.num_days = 2;
  cfg.sessions_per_day = 400;
  const World world = generate_world(cfg);
  for (auto _ : state) {
    SessionLog log = simulate_sessions(world, mode_of(state));
    benchmark::DoNotOptimize(log);
  }
}

void BM_rerank_feed(benchmark::State& state) {
  WorldConfig cfg;
  cfg.feed_length = 50;
  cfg.num_days = 1;
  cfg.sessions_per_day = 1;
  const World world = generate_world(cfg);
  Rng rng(31);
  std::vector<Item> items(world.items.begin(), world.items.begin() + 50);
  for (Item& item : items) item.main_score = rng.uniform();
  const Feed feed = make_feed(world.users.front(), items);
  const ScorerModel scorer =
      init_model(2 + cfg.num_topics + kContextualFeatureCount, {64, 32}, 2,
                 FeatureMode::contextual, 32);
  RerankParams params;
  params.window = 20;
  FeatureConfig fcfg;
  for (auto _ : state) {
    RerankResult r = rerank_feed(feed, scorer, params, fcfg, 0, mode_of(state));
    benchmark::DoNotOptimize(r);
  }
}

void BM_normalized_entropy(benchmark::State& state) {
  Rng rng(41);
  const std::size_t n = 200000;
  Vec preds(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = rng.uniform(0.05, 0.95);
    labels[i] = rng.bernoulli(0.4);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalized_entropy(preds, labels, mode_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

}  // namespace

BENCHMARK(BM_forward_batch)->Arg(0)->Arg(1)->ArgNames({"omp"});
BENCHMARK(BM_loss_and_gradient)->Arg(0)->Arg(1)->ArgNames({"omp"});
BENCHMARK(BM_simulate_sessions)->Arg(0)->Arg(1)->ArgNames({"omp"})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rerank_feed)->Arg(0)->Arg(1)->ArgNames({"omp"})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_normalized_entropy)->Arg(0)->Arg(1)->ArgNames({"omp"});

BENCHMARK_MAIN();
