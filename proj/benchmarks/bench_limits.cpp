// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "hallab/diagonal.hpp"
#include "hallab/halting.hpp"
#include "hallab/metrics.hpp"
#include "hallab/pumping.hpp"
#include "hallab/random.hpp"

namespace {

using namespace hallab;

Dist random_dist(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& v : w) total += (v = uniform01(rng) + 1e-3);
  for (auto& v : w) v /= total;
  return Dist(std::move(w));
}

void BM_KlDivergence(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(rng, n);
  const auto q = random_dist(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(kl_divergence(p, q));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KlDivergence)->Arg(2)->Arg(16)->Arg(256);

void BM_EvalTabular(benchmark::State& state) {
  const auto sp = OutputSpace::numbered(16);
  std::map<std::string, Dist> table;
  for (int i = 0; i < state.range(0); ++i) table.emplace("s#" + std::to_string(i), Dist::point(16, i % 16));
  const auto h = make_tabular(sp, table);
  for (auto _ : state) benchmark::DoNotOptimize(eval_plm(h, "s#0"));
}
BENCHMARK(BM_EvalTabular)->Arg(1)->Arg(64)->Arg(1024);

void BM_DiagonalFull(benchmark::State& state) {
  const auto sp = OutputSpace::numbered(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto scn = diagonal::DiagonalScenario::from_enumeration(sp, 8);
    const auto truth = diagonal::build_adversarial_truth(scn);
    benchmark::DoNotOptimize(diagonal::verify_diagonal(scn, truth));
  }
}
BENCHMARK(BM_DiagonalFull)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_RunBounded(benchmark::State& state) {
  const auto p = halting::make_program_family(halting::FamilyKind::kSlowHalt,
                                              static_cast<std::uint64_t>(state.range(0)), 1)[0];
  for (auto _ : state) benchmark::DoNotOptimize(halting::run_bounded(p, 1u << 30));
}
BENCHMARK(BM_RunBounded)->Arg(100)->Arg(10000);

void BM_KHat(benchmark::State& state) {
  const auto z = pumping::rand_incompressible(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(pumping::k_hat(z));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KHat)->Arg(64)->Arg(512)->Arg(4096);

}  // namespace
