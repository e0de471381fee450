// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hallab/hybrid.hpp"
#include "support.hpp"

namespace hallab::hybrid {
namespace {

using clm::CostParams;
using clm::Strategy;
using testing::code_of;

// Oracle for one fact queried n times: per-event charges spelled out.
double traced_hybrid_cost(std::uint64_t n, const CostParams& p, std::uint64_t t) {
  double total = 0.0;
  for (std::uint64_t i = 1; i <= n; ++i) {
    total += p.c_infer;
    if (i <= t) total += p.c_query;
    if (i == t) total += p.c_update;
  }
  return total;
}

TEST(Store, NoiseCountAndDeterminism) {
  const auto store = make_fact_store(200, 8, 1);
  const auto noisy = inject_noise(store, 0.15, 9);
  EXPECT_EQ(noisy.noise_mask().size(), 30u);
  EXPECT_EQ(noisy.corruption_rate(), 0.15);
  EXPECT_EQ(inject_noise(store, 0.15, 9).noise_mask(), noisy.noise_mask());
  std::size_t right = 0;
  for (const auto& [k, v] : store.entries()) {
    const auto got = noisy.lookup(k);
    ASSERT_TRUE(got);
    right += *got == v;
    if (noisy.noise_mask().contains(k)) {
      EXPECT_NE(*got, v);
    }
  }
  EXPECT_EQ(right, 170u);
  EXPECT_EQ(static_cast<double>(right) / 200.0, 1.0 - 0.15);
  EXPECT_EQ(inject_noise(store, 0.0, 1).noise_mask().size(), 0u);
  EXPECT_EQ(inject_noise(store, 1.0, 1).noise_mask().size(), 200u);
  EXPECT_EQ(code_of([&] { inject_noise(store, 1.5, 1); }), ErrorCode::kDomain);
  EXPECT_FALSE(store.lookup("absent"));
}

TEST(Store, CorruptionWrapsAround) {
  const auto sp = OutputSpace::numbered(3);
  EXPECT_EQ(corrupted_answer(sp, "y0"), "y1");
  EXPECT_EQ(corrupted_answer(sp, "y2"), "y0");
  EXPECT_EQ(code_of([&] { RetrievalStore(sp, {{"k", "bad"}}); }), ErrorCode::kDomain);
}

TEST(Config, Validation) {
  EXPECT_EQ(code_of([] { HybridConfig{0, 0.9, 0.0}.validate(); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { HybridConfig{3, 0.5, 0.5}.validate(); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { HybridConfig{3, 1.1, 0.0}.validate(); }), ErrorCode::kDomain);
  EXPECT_NO_THROW((HybridConfig{1, 1.0, 0.0}.validate()));
}

TEST(State, InternalizesOnTriggerAndRelianceDrops) {
  const auto sp = OutputSpace::numbered(4);
  HybridState st(RetrievalStore(sp, {{"a", "y2"}, {"b", "y1"}}), {3, 0.9, 0.0});
  const CostParams p{1.0, 2.0, 5.0};
  EXPECT_EQ(st.reliance_score("a"), 0.9);
  for (int i = 1; i <= 2; ++i) {
    const auto o = st.handle_query("a", p);
    EXPECT_FALSE(o.internalized_now);
    EXPECT_EQ(argmax_output(*o.answer).index, 2u);
  }
  const auto o = st.handle_query("a", p);
  EXPECT_TRUE(o.internalized_now);
  EXPECT_EQ(o.row.total(), 8.0);
  EXPECT_EQ(st.reliance_score("a"), 0.0);
  EXPECT_LT(st.reliance_score("a"), st.reliance_score("b"));
  ASSERT_EQ(st.events().size(), 1u);
  EXPECT_EQ(st.events()[0].query_index, 3u);
  EXPECT_EQ(st.handle_query("a", p).row.total(), 1.0);
  EXPECT_EQ(st.frequency("a"), 4u);
  EXPECT_EQ(st.frequency("b"), 0u);
  EXPECT_TRUE(st.ledger().consistent());
}

TEST(State, RelianceNeverIncreases) {
  Rng rng(4);
  const auto store = make_fact_store(30, 5, 2);
  HybridState st(store);
  const std::vector<std::string> keys = [&] {
    std::vector<std::string> k;
    for (const auto& [key, v] : store.entries()) k.push_back(key);
    return k;
  }();
  std::map<std::string, double> last;
  for (const auto& k : keys) last[k] = st.reliance_score(k);
  for (int i = 0; i < 500; ++i) {
    st.handle_query(keys[uniform_below(rng, keys.size())], {});
    for (const auto& k : keys) {
      const double r = st.reliance_score(k);
      ASSERT_LE(r, last[k]);
      last[k] = r;
    }
  }
}

TEST(State, UnknownInputAbstains) {
  HybridState st(RetrievalStore(OutputSpace::numbered(2), {{"a", "y0"}}));
  const auto o = st.handle_query("nope", {});
  EXPECT_FALSE(o.answer);
  ASSERT_TRUE(o.abstention);
  EXPECT_FALSE(st.peek("nope"));
  EXPECT_EQ(code_of([&] { st.reliance_score("nope"); }), ErrorCode::kDomain);
  EXPECT_EQ(o.row.total(), 1.0);
}

TEST(Cost, TraceMatchesClosedForm) {
  Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    const CostParams p{(1 + uniform_below(rng, 20)) / 4.0, (1 + uniform_below(rng, 20)) / 4.0,
                       (1 + uniform_below(rng, 200)) / 4.0};
    const auto t = 1 + uniform_below(rng, 6);
    const auto curve = cost_curve(p, t, 80);
    for (const auto& pt : curve) {
      ASSERT_EQ(pt.hybrid, traced_hybrid_cost(pt.n, p, t));
      ASSERT_EQ(pt.hybrid, cost_hybrid(pt.n, p, t));
      ASSERT_EQ(pt.rag, clm::cost_rag(pt.n, p));
    }
    std::uint64_t first = 0;
    for (std::uint64_t n = 1; first == 0; ++n) {
      if (traced_hybrid_cost(n, p, t) < clm::cost_rag(n, p)) first = n;
    }
    ASSERT_EQ(hybrid_crossover(p, t), first);
    ASSERT_EQ(first, clm::crossover(p) + t);
  }
  EXPECT_EQ(hybrid_crossover({1.0, 1.0, 287.0}, 3), 291u);
}

TEST(Workload, ZipfAndUniform) {
  const std::vector<std::string> keys{"a", "b", "c"};
  EXPECT_EQ(uniform_workload(keys, 2), (std::vector<std::string>{"a", "b", "c", "a", "b", "c"}));
  const auto z = zipf_workload(keys, 3000, 1.1, 5);
  EXPECT_EQ(z, zipf_workload(keys, 3000, 1.1, 5));
  std::map<std::string, int> count;
  for (const auto& k : z) ++count[k];
  EXPECT_GT(count["a"], count["b"]);
  EXPECT_GT(count["b"], count["c"]);
  EXPECT_EQ(code_of([&] { zipf_workload(keys, 3, 0.0, 1); }), ErrorCode::kDomain);
}

TEST(Robustness, ExtremesOfRho) {
  const auto store = make_fact_store(40, 4, 3);
  std::vector<std::string> keys;
  for (const auto& [k, v] : store.entries()) keys.push_back(k);
  RobustnessSetup setup{store, {}, {}, uniform_workload(keys, 3), 11};
  const auto work = uniform_workload(keys);
  EXPECT_EQ(measure_robustness(Policy::kPureRag, 0.0, work, setup), 1.0);
  EXPECT_EQ(measure_robustness(Policy::kPureRag, 1.0, work, setup), 0.0);
  EXPECT_EQ(measure_robustness(Policy::kHybrid, 0.0, work, setup), 1.0);
  // Everything was internalized clean during warmup.
  EXPECT_EQ(measure_robustness(Policy::kHybrid, 1.0, work, setup), 1.0);
}

TEST(Scenario, CanonicalOrderings) {
  const auto r = run_scenario({});
  EXPECT_TRUE(r.orderings_hold());
  EXPECT_EQ(r.row(Strategy::kPureRag).forgetting, 0.0);
  EXPECT_GT(r.row(Strategy::kHybrid).robustness, r.row(Strategy::kPureRag).robustness);
  EXPECT_LT(r.row(Strategy::kHybrid).forgetting, r.row(Strategy::kLossyPureClm).forgetting);
  EXPECT_EQ(r.uniform_rag_accuracy, 1.0 - 0.15);
  EXPECT_TRUE(r.ledger.consistent());
  for (const auto& e : r.reliance) EXPECT_LT(e.reliance_after, e.reliance_before);
  std::ostringstream os;
  write_strategy_table_csv(os, r.rows);
  EXPECT_EQ(os.str().substr(0, 9), "strategy,");
}

}  // namespace
}  // namespace hallab::hybrid
