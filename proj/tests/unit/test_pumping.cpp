// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hallab/pumping.hpp"
#include "support.hpp"

namespace hallab::pumping {
namespace {

using testing::code_of;

ProbabilisticTruth small_base(std::size_t n = 6) {
  ProbabilisticTruth t(OutputSpace({"0", "1"}));
  for (std::size_t i = 0; i < n; ++i) t.set("s" + std::to_string(i), Dist::point(2, i % 2));
  return t;
}

TEST(KHat, Examples) {
  const Bytes zeros(4096, 0);
  EXPECT_LT(k_hat(zeros), 8u * 100u);
  EXPECT_EQ(k_hat(zeros) % 8, 0u);
  EXPECT_EQ(k_hat(zeros), k_hat(zeros));
  const auto z = rand_incompressible(512, 1);
  EXPECT_GE(static_cast<double>(k_hat(z)), 0.95 * 8 * 512);
  EXPECT_LE(k_hat({}), 64u);
}

TEST(KHat, ConditionalFloorsAtZero) {
  const auto z = rand_incompressible(256, 3);
  EXPECT_LT(k_hat_conditional(z, z), k_hat(z) / 4);
  EXPECT_EQ(k_hat_conditional({}, z), 0u);
}

TEST(Zlib, RoundTrip) {
  ZlibCompressor c;
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    Bytes b(uniform_below(rng, 5000));
    for (auto& x : b) x = static_cast<std::uint8_t>(uniform_below(rng, i % 2 ? 256 : 3));
    EXPECT_EQ(c.decompress(c.compress(b)), b);
  }
  EXPECT_EQ(c.name(), "zlib-9");
}

TEST(Rand, DeterministicAndIncompressible) {
  for (std::size_t len : {16u, 64u, 512u}) {
    const auto a = rand_incompressible(len, 99);
    EXPECT_EQ(a.size(), len);
    EXPECT_EQ(a, rand_incompressible(len, 99));
    EXPECT_NE(a, rand_incompressible(len, 100));
    EXPECT_GE(static_cast<double>(k_hat(a)), kIncompressibleRatio * 8.0 * static_cast<double>(len));
  }
  EXPECT_EQ(code_of([] { rand_incompressible(15, 1); }), ErrorCode::kDomain);
}

TEST(Rand, PatchCoversShortLengths) {
  EXPECT_EQ(rand_patch(1, 5).size(), 1u);
  EXPECT_EQ(rand_patch(2, 5), rand_patch(2, 5));
  EXPECT_EQ(rand_patch(32, 5), rand_incompressible(32, 5));
  EXPECT_EQ(code_of([] { rand_patch(0, 5); }), ErrorCode::kDomain);
}

TEST(PatchedTruth, Bookkeeping) {
  const auto z = rand_incompressible(64, 4);
  const auto t = build_patched_truth(small_base(), "s*", z);
  EXPECT_EQ(t.patch_bits(), 512u);
  EXPECT_FALSE(t.base_agrees());
  EXPECT_EQ(t.at("s1"), Dist::point(2, 1));
  EXPECT_EQ(code_of([&] { t.at("s*"); }), ErrorCode::kDomain);
  EXPECT_GT(t.complexity_delta(), 0);
  EXPECT_GE(static_cast<double>(t.patch_k_hat()), 0.95 * 512);
  EXPECT_EQ(code_of([] { build_patched_truth(small_base(), "s*", {}); }), ErrorCode::kDomain);
}

TEST(PatchedTruth, BaseThatAlreadyAnswersNeedsNoStorage) {
  auto base = small_base();
  base.set("s*", Dist::point(2, 1));
  const auto t = build_patched_truth(base, "s*", to_bytes("1"));
  EXPECT_TRUE(t.base_agrees());
  const auto h = train_capacity_learner(base_rule_bits(base), t);
  EXPECT_EQ(decode_capacity_learner(h).stored_bits, 0u);
  EXPECT_EQ(measure_pumping(h, t).value, 0.0);
}

TEST(Learner, ClosedFormExample) {
  const auto z = rand_incompressible(64, 2);  // L = 512
  const auto t = build_patched_truth(small_base(), "s*", z);
  const auto rule = base_rule_bits(small_base());
  const auto h = train_capacity_learner(rule + 256, t);
  const auto c = decode_capacity_learner(h);
  EXPECT_EQ(c.patch_bits, 512u);
  EXPECT_EQ(c.stored_bits, 256u);
  const auto r = measure_pumping(h, t);
  EXPECT_NEAR(r.value, 256 * std::numbers::ln2, 1e-9);
  EXPECT_TRUE(r.violated);
  EXPECT_EQ(capacity_of(h), 8 * h.descriptor().size());
}

TEST(Learner, BudgetBelowBaseRuleRejected) {
  const auto t = build_patched_truth(small_base(), "s*", rand_patch(8, 1));
  EXPECT_EQ(code_of([&] { train_capacity_learner(base_rule_bits(small_base()) - 1, t); }),
            ErrorCode::kDomain);
}

TEST(Learner, WrongOutputHasZeroProbability) {
  auto z = rand_incompressible(32, 6);
  const auto t = build_patched_truth(small_base(), "s*", z);
  const auto h = train_capacity_learner(base_rule_bits(small_base()) + 40, t);
  z[0] ^= 0x80;
  EXPECT_EQ(log_output_probability(h, "s*", z), -std::numeric_limits<double>::infinity());
  // Off-patch inputs follow the base rule.
  EXPECT_EQ(eval_plm(h, "s3"), Dist::point(2, 1));
}

TEST(Learner, DistortionIsClosedFormAcrossPartialBytes) {
  Rng rng(12);
  const auto base = small_base();
  const auto rule = base_rule_bits(base);
  for (int i = 0; i < 200; ++i) {
    const auto bytes = 1 + uniform_below(rng, 40);
    const auto z = rand_patch(bytes, rng());
    const auto t = build_patched_truth(base, "s*", z);
    const auto slack = uniform_below(rng, 8 * bytes + 16);
    const auto h = train_capacity_learner(rule + slack, t);
    const auto stored = std::min<std::uint64_t>(slack, 8 * bytes);
    ASSERT_EQ(decode_capacity_learner(h).stored_bits, stored);
    ASSERT_NEAR(measure_pumping(h, t).value,
                static_cast<double>(8 * bytes - stored) * std::numbers::ln2, 1e-9);
  }
}

TEST(Learner, BruteForceDistributionForShortPatches) {
  const auto base = small_base();
  for (std::uint32_t bits : {8u, 16u}) {
    for (std::uint32_t stored : {0u, 3u, 8u}) {
      const auto z = rand_patch(bits / 8, bits + stored);
      const auto t = build_patched_truth(base, "s*", z);
      const auto h = train_capacity_learner(base_rule_bits(base) + stored, t);
      const auto d = eval_plm(h, "s*");
      ASSERT_EQ(d.size(), std::size_t{1} << bits);
      double total = 0.0;
      std::size_t support = 0;
      for (std::size_t v = 0; v < d.size(); ++v) {
        total += d[v];
        support += d[v] > 0.0;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_EQ(support, std::size_t{1} << (bits - stored));
      std::size_t zi = 0;
      for (auto b : z) zi = (zi << 8) | b;
      EXPECT_NEAR(std::log(d[zi]), -measure_pumping(h, t).value, 1e-12);
    }
  }
}

TEST(Learner, LongPatchNotEnumerable) {
  const auto t = build_patched_truth(small_base(), "s*", rand_patch(3, 1));
  const auto h = train_capacity_learner(base_rule_bits(small_base()), t);
  EXPECT_EQ(code_of([&] { eval_plm(h, "s*"); }), ErrorCode::kDomain);
}

TEST(Learner, FixedBudgetBlowsUpMonotonically) {
  const auto base = small_base();
  const auto budget = base_rule_bits(base) + 32;
  double prev = -1.0;
  for (std::size_t bytes = 1; bytes <= 256; bytes *= 2) {
    const auto t = build_patched_truth(base, "s*", rand_patch(bytes, bytes));
    const double v = measure_pumping(train_capacity_learner(budget, t), t).value;
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_GT(prev, 1000.0);
}

TEST(Learner, EnoughCapacityEscapes) {
  const auto base = small_base();
  const auto t = build_patched_truth(base, "s*", rand_incompressible(128, 77));
  const auto h = train_capacity_learner(base_rule_bits(base) + t.patch_bits(), t);
  EXPECT_EQ(measure_pumping(h, t).value, 0.0);
}

TEST(Onset, MatchesMeasuredViolation) {
  for (double tau : {0.0, 0.6, 1.0, 5.0}) {
    for (std::uint64_t slack : {0u, 5u, 32u}) {
      const auto onset = pumping_onset_bits(slack, tau);
      EXPECT_EQ(onset, slack + static_cast<std::uint64_t>(std::floor(tau / std::numbers::ln2)) + 1);
      for (std::uint64_t l = 1; l <= slack + 12; ++l) {
        const double h = static_cast<double>(l > slack ? l - slack : 0) * std::numbers::ln2;
        EXPECT_EQ(h > tau, l >= onset) << tau << " " << slack << " " << l;
      }
    }
  }
}

TEST(Curve, CsvLayout) {
  std::vector<PumpingPoint> pts{{64, 32, 32 * std::numbers::ln2}};
  std::ostringstream os;
  write_pumping_curve_csv(os, pts);
  EXPECT_EQ(os.str().substr(0, 24), "L_bits,stored_bits,H_Dis");
  EXPECT_NE(os.str().find("\n64,32,"), std::string::npos);
}

}  // namespace
}  // namespace hallab::pumping
