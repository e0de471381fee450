// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "hallab/halting.hpp"
#include "support.hpp"

namespace hallab::halting {
namespace {

using testing::code_of;

TEST(Program, CountdownHandTrace) {
  // r0 = 3: DEC, JZ, JMP per pass while non-zero, then DEC, JZ, HALT.
  const auto p = Program::parse("DEC r0\nJZ r0 3\nJMP 0\nHALT\n");
  EXPECT_EQ(run_bounded(p, 100, {3}), RunResult(HaltedAt{9}));
  EXPECT_EQ(run_bounded(p, 8, {3}), RunResult(BudgetExhausted{}));
  EXPECT_EQ(run_bounded(p, 9, {3}), RunResult(HaltedAt{9}));
}

TEST(Program, Basics) {
  EXPECT_EQ(run_bounded(Program::parse("HALT"), 1), RunResult(HaltedAt{1}));
  EXPECT_EQ(run_bounded(Program::parse("JMP 0"), 1000), RunResult(BudgetExhausted{}));
  EXPECT_EQ(run_bounded(Program::parse("DEC r0\nHALT"), 5), RunResult(HaltedAt{2}));
  EXPECT_EQ(code_of([] { run_bounded(Program::parse("HALT"), 0); }), ErrorCode::kDomain);
}

TEST(Program, ParseAndCanonicalText) {
  const auto p = Program::parse("  # header\nINC r1   # bump\n\nJZ r0 2\nHALT\n");
  EXPECT_EQ(p.text(), "INC r1\nJZ r0 2\nHALT\n");
  EXPECT_EQ(Program::parse(p.text()).instructions(), p.instructions());
  EXPECT_EQ(p.registers(), 2u);
}

TEST(Program, ParseErrors) {
  EXPECT_EQ(code_of([] { Program::parse(""); }), ErrorCode::kDecode);
  EXPECT_EQ(code_of([] { Program::parse("JMP 4\nHALT"); }), ErrorCode::kDecode);
  EXPECT_EQ(code_of([] { Program::parse("FROB r0"); }), ErrorCode::kDecode);
  EXPECT_EQ(code_of([] { Program::parse("INC x0"); }), ErrorCode::kDecode);
}

TEST(Program, LabelsAreChecked) {
  const std::vector<Instruction> halt{{Opcode::kHalt}};
  EXPECT_NO_THROW(Program(halt, HaltsIn{1}));
  EXPECT_EQ(code_of([&] { Program(halt, HaltsIn{2}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([&] { Program(halt, NeverHalts{}); }), ErrorCode::kDomain);
}

std::uint64_t steps_of(const RunResult& r) { return std::get<HaltedAt>(r).steps; }

TEST(Families, LabelsAreSound) {
  for (std::uint64_t n : {1u, 4u, 10u, 37u}) {
    for (const auto& p : make_program_family(FamilyKind::kFastHalt, n, 20)) {
      const auto steps = std::get<HaltsIn>(p.label()).steps;
      EXPECT_LE(steps, n);
      EXPECT_EQ(steps_of(run_bounded(p, n)), steps);
    }
    for (const auto& p : make_program_family(FamilyKind::kSlowHalt, n, 20)) {
      const auto steps = std::get<HaltsIn>(p.label()).steps;
      EXPECT_GT(steps, n);
      EXPECT_EQ(run_bounded(p, n), RunResult(BudgetExhausted{}));
      EXPECT_EQ(steps_of(run_bounded(p, steps)), steps);
    }
    for (const auto& p : make_program_family(FamilyKind::kNeverHalt, n, 20)) {
      EXPECT_TRUE(std::holds_alternative<NeverHalts>(p.label()));
      EXPECT_EQ(run_bounded(p, 100000), RunResult(BudgetExhausted{}));
    }
  }
}

TEST(Families, MembersAreDistinct) {
  const auto f = make_program_family(FamilyKind::kNeverHalt, 8, 30);
  std::set<std::string> texts;
  for (const auto& p : f) texts.insert(p.text());
  EXPECT_EQ(texts.size(), f.size());
}

TEST(Truth, PointMassAndUnknownRejected) {
  const auto slow = make_program_family(FamilyKind::kSlowHalt, 10, 2);
  const auto t = halting_truth(slow);
  EXPECT_EQ(t.at(slow[0].text()), Dist::point(2, 0));
  const auto never = make_program_family(FamilyKind::kNeverHalt, 10, 1);
  EXPECT_EQ(halting_truth(never).at(never[0].text()), Dist::point(2, 1));
  EXPECT_EQ(code_of([] { halting_truth({Program::parse("HALT")}); }), ErrorCode::kDomain);
  EXPECT_EQ(answer_space().symbol(0), kHalts);
  EXPECT_EQ(answer_space().symbol(1), kDoesntHalt);
}

TEST(Simulator, SpecValidationAndRoundTrip) {
  EXPECT_EQ(code_of([] { make_budget_simulator({10, 0.5, Dist::uniform(2)}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { make_budget_simulator({10, 1.01, Dist::uniform(2)}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { make_budget_simulator({0, 1.0, Dist::uniform(2)}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { make_budget_simulator({10, 1.0, Dist::uniform(3)}); }),
            ErrorCode::kDimension);
  const BudgetSimulatorSpec spec{77, 0.75, Dist({0.2, 0.8})};
  const auto got = decode_budget_simulator(make_budget_simulator(spec));
  EXPECT_EQ(got.budget, 77u);
  EXPECT_EQ(got.confidence, 0.75);
  EXPECT_EQ(got.fallback, spec.fallback);
}

TEST(Simulator, EvaluatesByBoundedRun) {
  const auto h = make_budget_simulator({10, 0.9, Dist({0.3, 0.7})});
  const auto halted = eval_plm(h, "HALT\n");
  EXPECT_EQ(halted[0], 0.9);
  EXPECT_NEAR(halted[1], 0.1, 1e-15);
  EXPECT_EQ(eval_plm(h, "JMP 0\n"), Dist({0.3, 0.7}));
  EXPECT_EQ(eval_plm(h, "not a program"), Dist({0.3, 0.7}));
}

TEST(Failure, NeverFamilyDistortIsMinusLogFallback) {
  const auto h = make_budget_simulator({50, 1.0, Dist({0.9, 0.1})});
  const auto demo = demonstrate_failure(h, kDefaultDistortTau, 8);
  ASSERT_EQ(demo.never_reports.size(), 8u);
  for (const auto& r : demo.never_reports) EXPECT_NEAR(r.value, -std::log(0.1), 1e-12);
  EXPECT_TRUE(demo.never_family_violated);
  // Slow programs get the same fallback: -ln 0.9 is below tau.
  EXPECT_FALSE(demo.slow_family_violated);
}

TEST(Failure, TauMustBeBelowLnTwo) {
  const auto h = make_budget_simulator({});
  EXPECT_EQ(code_of([&] { demonstrate_failure(h, std::log(2.0)); }), ErrorCode::kDomain);
}

TEST(Failure, RandomFallbacksAlwaysViolateOneFamily) {
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) {
    const Dist fb = testing::random_dist(rng, 2, i % 10 == 0);
    const auto budget = static_cast<std::uint32_t>(1 + uniform_below(rng, 200));
    const auto h = make_budget_simulator({budget, 0.51 + 0.49 * uniform01(rng), fb});
    const auto demo = demonstrate_failure(h, kDefaultDistortTau, 4);
    EXPECT_TRUE(demo.slow_family_violated || demo.never_family_violated) << fb[0];
  }
}

TEST(Decider, ThresholdIsStrictHalf) {
  const auto h = make_budget_simulator({5, 1.0, Dist::uniform(2)});
  const auto d = decider_reduction(h, {});
  const auto never = make_program_family(FamilyKind::kNeverHalt, 5, 1)[0];
  const auto r = d.decide(never);
  EXPECT_EQ(r.answer, kDoesntHalt);  // 0.5 is not > 0.5
  EXPECT_EQ(r.halts_probability, 0.5);
  EXPECT_FALSE(r.from_exception_table);
}

TEST(Decider, ExactWithExceptionTable) {
  const std::uint32_t budget = 40;
  const auto h = make_budget_simulator({budget, 1.0, Dist({0.9, 0.1})});
  const auto slow = make_program_family(FamilyKind::kSlowHalt, budget, 10);
  const auto never = make_program_family(FamilyKind::kNeverHalt, budget, 10);
  const auto fast = make_program_family(FamilyKind::kFastHalt, budget, 10);
  std::map<std::string, std::string> exceptions;
  for (const auto& p : never) exceptions[p.text()] = std::string(kDoesntHalt);
  const auto decider = decider_reduction(h, exceptions);
  for (const auto& p : fast) EXPECT_EQ(decider.decide(p).answer, kHalts);
  for (const auto& p : slow) EXPECT_EQ(decider.decide(p).answer, kHalts);
  for (const auto& p : never) {
    const auto r = decider.decide(p);
    EXPECT_EQ(r.answer, kDoesntHalt);
    EXPECT_TRUE(r.from_exception_table);
    EXPECT_TRUE(std::isnan(r.halts_probability));
  }
  EXPECT_EQ(code_of([&] { decider_reduction(h, {{"HALT\n", "maybe"}}); }), ErrorCode::kDomain);
}

}  // namespace
}  // namespace hallab::halting
