// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "hallab/enumeration.hpp"
#include "hallab/oracle_escape.hpp"
#include "support.hpp"

namespace hallab::oracle {
namespace {

using testing::code_of;

TEST(SelfRef, DeterministicAndDistinct) {
  const auto sp = doubled_space(OutputSpace::numbered(2));
  const auto e = enumerate_plms(sp, {"x"}, 3);
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < e.size(); ++i) {
    const auto s = build_self_referential_input(e.at(i));
    EXPECT_EQ(s, build_self_referential_input(e.at(i)));
    EXPECT_EQ(s.rfind(kSelfRefPrefix, 0), 0u);
    EXPECT_EQ(s.size(), kSelfRefPrefix.size() + 16);
    seen.insert(s);
  }
  EXPECT_EQ(seen.size(), e.size());
  const auto h = e.at(0);
  EXPECT_EQ(build_self_referential_input(h),
            std::string(kSelfRefPrefix) + hex64(fnv1a64(h.descriptor())));
}

TEST(Space, DoubledWithNegations) {
  const auto d = doubled_space(OutputSpace::numbered(3));
  ASSERT_EQ(d.size(), 6u);
  EXPECT_EQ(d.symbol(2), "y2");
  EXPECT_EQ(d.symbol(5), "NOT(y2)");
  EXPECT_EQ(negation_of("y2"), "NOT(y2)");
}

TEST(Adversary, ContradictsArgmax) {
  const auto sp = doubled_space(OutputSpace::numbered(2));
  const auto h = make_tabular(sp, {}, Dist({0.1, 0.6, 0.2, 0.1}));
  AdversarialOracle o(h);
  EXPECT_EQ(o.model_answer(), "y1");
  EXPECT_EQ(o.answer(o.adversarial_input()), "NOT(y1)");
  EXPECT_EQ(o.answer("other"), sp.symbol(0));
  EXPECT_EQ(o.call_count(), 0u);

  const auto neg = make_tabular(sp, {}, Dist::point(4, 3));
  EXPECT_EQ(AdversarialOracle(neg).answer(build_self_referential_input(neg)), "y1");
}

TEST(Adversary, NeedsNegationSymbols) {
  const auto h = make_tabular(OutputSpace::numbered(2), {});
  EXPECT_EQ(code_of([&] { AdversarialOracle o(h); }), ErrorCode::kDomain);
}

TEST(Adversary, UniformModelStraysByAtLeastOneEighth) {
  const auto sp = doubled_space(OutputSpace::numbered(4));
  const auto h = make_tabular(sp, {});
  const auto o = adversarial_oracle(h);
  const double v = h_stray_against_oracle(eval_plm(h, o.adversarial_input()), sp, o,
                                          o.adversarial_input());
  EXPECT_NEAR(v, 1.0 - 0.125, 1e-15);
  EXPECT_GE(v, 0.125);
}

TEST(Escape, StandardStraysAugmentedExact) {
  Rng rng(31);
  const auto sp = doubled_space(OutputSpace::numbered(3));
  std::vector<std::string> inputs;
  for (int i = 0; i < 50; ++i) inputs.push_back("t#" + std::to_string(i));
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = make_tabular(sp, {}, testing::random_dist(rng, sp.size(), true));
    auto with_star = inputs;
    with_star.push_back(build_self_referential_input(h));
    const auto r = verify_oracle_escape(h, with_star);
    const auto top = argmax_output(eval_plm(h, "anything"));
    EXPECT_GE(r.standard_report.value, top.probability - 1e-12);
    EXPECT_TRUE(r.standard_report.violated);
    ASSERT_EQ(r.augmented_reports.size(), with_star.size());
    for (const auto& a : r.augmented_reports) EXPECT_EQ(a.value, 0.0);
    EXPECT_EQ(r.oracle_calls, with_star.size());
  }
}

TEST(Metering, QueriesCountedAndTraced) {
  TableOracle o("t", {{"a", "y1"}}, "y0", 0.5);
  OracleAugmentedPlm m(OutputSpace::numbered(2), o);
  EXPECT_EQ(m.eval("a"), Dist::point(2, 1));
  EXPECT_EQ(m.eval("b"), Dist::point(2, 0));
  EXPECT_EQ(o.answer("a"), "y1");
  EXPECT_EQ(o.call_count(), 2u);
  ASSERT_EQ(o.trace().size(), 2u);
  EXPECT_EQ(o.trace()[1].cumulative_cost, 1.0);
  EXPECT_EQ(m.plm().kind(), PlmKind::kOracleAugmented);
  std::ostringstream os;
  o.write_trace_csv(os);
  EXPECT_NE(os.str().find("a,y1,0.5"), std::string::npos);
}

TEST(Metering, AnswersOutsideSpaceRejected) {
  TableOracle o("t", {}, "zz");
  OracleAugmentedPlm m(OutputSpace::numbered(2), o);
  EXPECT_EQ(code_of([&] { m.eval("a"); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { TableOracle("n", {}, "y0", -1.0); }), ErrorCode::kDomain);
}

}  // namespace
}  // namespace hallab::oracle
