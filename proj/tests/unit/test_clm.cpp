// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "hallab/clm.hpp"
#include "hallab/pumping.hpp"
#include "support.hpp"

namespace hallab::clm {
namespace {

using testing::code_of;

// Independent crossover: walk the event ledgers row by row.
std::uint64_t ledger_crossover(const CostParams& p) {
  for (std::uint64_t limit = 64;; limit *= 2) {
    const auto rag = simulate_rag(limit, p);
    const auto clm = simulate_clm(limit, p);
    double acc_rag = 0.0, acc_clm = 0.0;
    for (std::uint64_t i = 0; i < limit; ++i) {
      acc_rag += rag.rows()[i].total();
      acc_clm += clm.rows()[i].total();
      if (acc_clm < acc_rag) return i + 1;
    }
  }
}

TEST(Cost, Examples) {
  EXPECT_EQ(crossover({1.0, 1.0, 2.0}), 3u);
  EXPECT_EQ(crossover({1.0, 1.0, 287.0}), 288u);
  EXPECT_EQ(crossover({1.0, 1.0, 1e-9}), 1u);
  EXPECT_EQ(cost_rag(10, {2.0, 3.0, 4.0}), 50.0);
  EXPECT_EQ(cost_clm(10, {2.0, 3.0, 4.0}), 24.0);
  EXPECT_EQ(code_of([] { cost_clm(0, {}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { crossover({1.0, 0.0, 1.0}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { CostParams{-1.0, 1.0, 1.0}.validate(); }), ErrorCode::kDomain);
}

TEST(Cost, ClosedFormMatchesLedger) {
  Rng rng(123);
  auto dyadic = [&](std::uint64_t max_quarters) {
    return static_cast<double>(1 + uniform_below(rng, max_quarters)) / 4.0;
  };
  for (int i = 0; i < 1000; ++i) {
    const CostParams p{dyadic(40), dyadic(40), dyadic(400)};
    const auto closed = static_cast<std::uint64_t>(std::floor(p.c_update / p.c_query)) + 1;
    ASSERT_EQ(crossover(p), closed);
    ASSERT_EQ(ledger_crossover(p), closed) << p.c_infer << " " << p.c_query << " " << p.c_update;
  }
}

TEST(Cost, LedgerTotals) {
  const CostParams p{1.0, 2.0, 5.0};
  const auto l = simulate_clm(4, p);
  EXPECT_EQ(l.total(Strategy::kClm), 9.0);
  EXPECT_EQ(l.total_at(Strategy::kClm, 1), 6.0);
  EXPECT_EQ(l.total(Strategy::kPureRag), 0.0);
  EXPECT_TRUE(l.consistent());
  EXPECT_EQ(simulate_rag(4, p).total(Strategy::kPureRag), cost_rag(4, p));
}

TEST(State, UpdateInternalizesAndGrows) {
  auto s = ClmState::create(OutputSpace::numbered(3));
  ASSERT_EQ(s.capacity_history().size(), 1u);
  for (int i = 0; i < 20; ++i) {
    s = update(s, {"in" + std::to_string(i), "y" + std::to_string(i % 3)});
    EXPECT_TRUE(answers_correctly(s.current(), {"in" + std::to_string(i), "y" + std::to_string(i % 3)}));
  }
  EXPECT_EQ(s.t(), 20u);
  const auto& hist = s.capacity_history();
  ASSERT_EQ(hist.size(), 21u);
  for (std::size_t i = 1; i < hist.size(); ++i) EXPECT_GT(hist[i], hist[i - 1]);
  EXPECT_EQ(s.novelty_history().size(), 20u);
  EXPECT_EQ(snapshot_fact(s.current(), "in4"), "y1");
  EXPECT_FALSE(snapshot_fact(s.current(), "nope"));
}

TEST(State, UpdatesArePure) {
  const auto a = ClmState::create(OutputSpace::numbered(2));
  const auto b = update(a, {"x", "y1"});
  EXPECT_FALSE(a.knows("x"));
  EXPECT_TRUE(b.knows("x"));
  EXPECT_EQ(update(a, {"x", "y1"}).current(), b.current());
}

TEST(State, OverwriteIsAudited) {
  auto s = ClmState::create(OutputSpace::numbered(2));
  s = update(s, {"x", "y0"});
  s = update(s, {"x", "y1"});
  ASSERT_EQ(s.audit_log().size(), 1u);
  EXPECT_EQ(s.audit_log()[0].old_answer, "y0");
  EXPECT_EQ(s.audit_log()[0].new_answer, "y1");
  EXPECT_EQ(s.audit_log()[0].t, 2u);
  EXPECT_EQ(s.snapshot().facts.size(), 1u);
}

TEST(State, SnapshotRoundTrip) {
  const OutputSpace sp = OutputSpace::numbered(2);
  const auto base = make_tabular(sp, {{"b", Dist::point(2, 1)}});
  auto s = ClmState::create(sp, base);
  s = update(s, {"x", "y0"});
  const auto snap = Snapshot::decode(s.current());
  EXPECT_EQ(snap.facts, s.snapshot().facts);
  EXPECT_EQ(snap.encode(), s.current());
  EXPECT_EQ(snapshot_base_model(s.current()), base);
  EXPECT_EQ(eval_plm(s.current(), "b"), Dist::point(2, 1));
  EXPECT_EQ(code_of([&] { ClmState::create(OutputSpace::numbered(3), base); }),
            ErrorCode::kDimension);
  EXPECT_EQ(code_of([&] { ClmState::create(sp, UniformRule{}, 0); }), ErrorCode::kDomain);
}

TEST(Forgetting, UnboundedKeepsEverything) {
  auto before = ClmState::create(OutputSpace::numbered(2));
  std::vector<Fact> probes;
  for (int i = 0; i < 10; ++i) {
    probes.push_back({"p" + std::to_string(i), "y1"});
    before = update(before, probes.back());
  }
  auto after = before;
  for (int i = 0; i < 50; ++i) after = update(after, {"n" + std::to_string(i), "y0"});
  EXPECT_EQ(forgetting_rate(before, after, probes), 0.0);
}

TEST(Forgetting, FifoCapEvictsOldest) {
  auto before = ClmState::create(OutputSpace::numbered(2), UniformRule{}, 2);
  const std::vector<Fact> probes{{"a", "y1"}, {"b", "y1"}};
  for (const auto& f : probes) before = update(before, f);
  const auto after = update(before, {"c", "y1"});
  ASSERT_EQ(after.evicted().size(), 1u);
  EXPECT_EQ(after.evicted()[0].input, "a");
  EXPECT_EQ(forgetting_rate(before, after, probes), 0.5);
  EXPECT_EQ(code_of([&] { forgetting_rate(before, after, {}); }), ErrorCode::kDomain);
  const std::vector<Fact> unknown{{"zz", "y1"}};
  EXPECT_EQ(code_of([&] { forgetting_rate(before, after, unknown); }), ErrorCode::kDomain);
}

TEST(Facts, HighByteAnswersMatchExactly) {
  const std::string raw("\xff\x80\x01\xc3", 4);
  auto s = ClmState::create(OutputSpace::numbered(2));
  s = update(s, {"s*", raw});
  const Bytes want{0xff, 0x80, 0x01, 0xc3};
  EXPECT_EQ(output_probability(s.current(), "s*", want), 1.0);
  Bytes other = want;
  other[0] = 0x7f;
  EXPECT_EQ(output_probability(s.current(), "s*", other), 0.0);
}

TEST(Facts, PatchEscapesThroughUpdate) {
  const auto z = pumping::rand_incompressible(128, 5);
  auto s = ClmState::create(OutputSpace({"0", "1"}));
  EXPECT_EQ(output_probability(s.current(), "s*", z), 0.0);
  const auto before = capacity_of(s.current());
  s = update(s, {"s*", hallab::to_string(z)});
  EXPECT_EQ(output_probability(s.current(), "s*", z), 1.0);
  EXPECT_GE(capacity_of(s.current()) - before, 8 * z.size());
  EXPECT_GE(s.novelty_history()[0], static_cast<std::uint64_t>(0.95 * 8 * 128));
}

TEST(Head, AffineSoftmaxEval) {
  AffineSoftmaxHead h{1, 1, 2, {1.0}, {0.0}, {1.0, -1.0}, {0.0, 0.0}};
  const std::vector<double> x{0.0};
  EXPECT_EQ(h.eval(x), Dist::uniform(2));
  const std::vector<double> big{3.0};
  const auto d = h.eval(big);
  EXPECT_NEAR(d[0], 1.0 / (1.0 + std::exp(-6.0)), 1e-12);
}

}  // namespace
}  // namespace hallab::clm
