// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "hallab/clm.hpp"
#include "hallab/hybrid.hpp"
#include "hallab/neuro_game.hpp"

namespace {

using namespace hallab;

void BM_ClmUpdate(benchmark::State& state) {
  auto base = clm::ClmState::create(OutputSpace::numbered(8));
  for (int i = 0; i < state.range(0); ++i) {
    base = clm::update(base, {"f#" + std::to_string(i), "y" + std::to_string(i % 8)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(clm::update(base, {"new", "y3"}));
}
BENCHMARK(BM_ClmUpdate)->Arg(0)->Arg(100)->Arg(1000);

void BM_HybridQuery(benchmark::State& state) {
  const auto store = hybrid::make_fact_store(200, 8, 1);
  hybrid::HybridState st(store);
  const clm::CostParams p;
  std::vector<std::string> keys;
  for (const auto& [k, v] : store.entries()) keys.push_back(k);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(st.handle_query(keys[i++ % keys.size()], p));
}
BENCHMARK(BM_HybridQuery);

void BM_HybridScenario(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(hybrid::run_scenario({}));
}
BENCHMARK(BM_HybridScenario)->Unit(benchmark::kMillisecond);

void BM_CostCurve(benchmark::State& state) {
  const clm::CostParams p{1.0, 1.0, 287.0};
  for (auto _ : state) benchmark::DoNotOptimize(hybrid::cost_curve(p, 3, 600));
}
BENCHMARK(BM_CostCurve)->Unit(benchmark::kMillisecond);

void BM_ElboGradient(benchmark::State& state) {
  Rng rng(5);
  const auto task = neuro::two_cluster_task(100, static_cast<int>(state.range(0)), 1.0, 0.5, 7);
  const auto c = neuro::Cortex::random(static_cast<int>(state.range(0)), 1, 2, 0.2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(neuro::grad_g(c, task.X));
}
BENCHMARK(BM_ElboGradient)->Arg(2)->Arg(16);

void BM_SolveGame(benchmark::State& state) {
  neuro::GameConfig cfg;
  for (auto _ : state) {
    auto st = neuro::initial_state(neuro::two_cluster_task(100, 2, 1.0, 0.5, 7), cfg);
    benchmark::DoNotOptimize(neuro::solve_hne(st, cfg));
  }
}
BENCHMARK(BM_SolveGame)->Unit(benchmark::kMillisecond);

}  // namespace
