// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hallab/metrics.hpp"
#include "support.hpp"

namespace hallab {
namespace {

using testing::code_of;
using testing::random_dist;

constexpr double kInf = std::numeric_limits<double>::infinity();

using testing::kl_oracle;

std::vector<double> vec(const Dist& d) { return {d.probs().begin(), d.probs().end()}; }

TEST(Kl, Examples) {
  EXPECT_EQ(kl_divergence(Dist({0.5, 0.5}), Dist({0.5, 0.5})), 0.0);
  EXPECT_NEAR(kl_divergence(Dist({1.0, 0.0}), Dist({0.5, 0.5})), std::numbers::ln2, 1e-15);
  EXPECT_EQ(kl_divergence(Dist({0.5, 0.5}), Dist({1.0, 0.0})), kInf);
  EXPECT_EQ(kl_divergence(Dist({0.0, 1.0}), Dist({0.0, 1.0})), 0.0);
}

TEST(Kl, DimensionMismatch) {
  EXPECT_EQ(code_of([] { kl_divergence(Dist::uniform(2), Dist::uniform(3)); }),
            ErrorCode::kDimension);
}

TEST(Kl, MatchesOracle) {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    const auto n = 2 + uniform_below(rng, 8);
    const auto p = random_dist(rng, n, true);
    const auto q = random_dist(rng, n, i % 4 == 0);
    const double want = kl_oracle(vec(p), vec(q));
    const double got = kl_divergence(p, q);
    if (std::isinf(want)) {
      ASSERT_EQ(got, kInf);
    } else {
      ASSERT_NEAR(got, want, 1e-12);
    }
  }
}

TEST(Kl, NonNegativeAndZeroOnlyOnEquality) {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const auto n = 2 + uniform_below(rng, 6);
    const auto p = random_dist(rng, n, true);
    const auto q = random_dist(rng, n, true);
    ASSERT_GE(kl_divergence(p, q), 0.0);
    ASSERT_EQ(kl_divergence(p, p), 0.0);
  }
}

TEST(HDistort, IsKlFromTruthToModel) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto n = 2 + uniform_below(rng, 5);
    const OutputSpace sp = OutputSpace::numbered(n);
    const auto truth_d = random_dist(rng, n, true);
    const auto model_d = random_dist(rng, n, true);
    ProbabilisticTruth f(sp);
    f.set("s", truth_d);
    const auto h = make_tabular(sp, {{"s", model_d}});
    const double want = kl_oracle(vec(truth_d), vec(model_d));
    const double got = h_distort(h, f, "s");
    if (std::isinf(want)) {
      ASSERT_EQ(got, kInf);
    } else {
      ASSERT_NEAR(got, want, 1e-12);
    }
  }
}

TEST(HDistort, LnTwoExampleAndThreshold) {
  const OutputSpace sp({"0", "1"});
  ProbabilisticTruth f(sp);
  f.set("s", Dist::point(2, 0));
  const auto h = make_tabular(sp, {});
  const double v = h_distort(h, f, "s");
  EXPECT_NEAR(v, std::numbers::ln2, 1e-15);
  EXPECT_TRUE(HallucinationReport::make("s", MetricKind::kDistort, v, kDefaultDistortTau).violated);
  EXPECT_LT(kDefaultDistortTau, std::numbers::ln2);
}

TEST(HDistort, InfiniteFormatsAsInf) {
  const OutputSpace sp({"0", "1"});
  ProbabilisticTruth f(sp);
  f.set("s", Dist::point(2, 0));
  const auto h = make_tabular(sp, {{"s", Dist::point(2, 1)}});
  const auto r = HallucinationReport::make("s", MetricKind::kDistort, h_distort(h, f, "s"), 0.6);
  EXPECT_EQ(r.value, kInf);
  EXPECT_TRUE(r.violated);
  EXPECT_EQ(to_csv_row(r), "s,Distort,INF,0.6,true");
}

TEST(HStray, ComplementMass) {
  const OutputSpace sp = OutputSpace::numbered(4);
  RelationalTruth t(sp);
  t.set("s", {0, 2});
  const Dist d({0.1, 0.2, 0.3, 0.4});
  EXPECT_NEAR(h_stray(d, t, "s"), 0.6, 1e-15);
  EXPECT_NEAR(h_stray(make_tabular(sp, {{"s", d}}), t, "s"), 0.6, 1e-15);
  EXPECT_EQ(h_stray(Dist::point(4, 2), t, "s"), 0.0);
  EXPECT_EQ(code_of([&] { h_stray(d, t, "unset"); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([&] { h_stray(Dist::uniform(3), t, "s"); }), ErrorCode::kDimension);
}

TEST(HStray, MatchesSubsetSum) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto n = 2 + uniform_below(rng, 6);
    RelationalTruth t(OutputSpace::numbered(n));
    std::set<std::size_t> image;
    for (std::size_t k = 0; k < n; ++k) {
      if (uniform_below(rng, 2)) image.insert(k);
    }
    if (image.empty()) image.insert(uniform_below(rng, n));
    t.set("s", image);
    const auto d = random_dist(rng, n, true);
    double outside = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!image.count(k)) outside += d[k];
    }
    const double got = h_stray(d, t, "s");
    ASSERT_NEAR(got, outside, 1e-12);
    ASSERT_GE(got, 0.0);
    ASSERT_LE(got, 1.0 + 1e-12);
  }
}

TEST(Report, ViolationIsStrict) {
  EXPECT_FALSE(HallucinationReport::make("s", MetricKind::kStray, 0.25, 0.25).violated);
  EXPECT_TRUE(HallucinationReport::make("s", MetricKind::kStray, 0.2500001, 0.25).violated);
}

TEST(Csv, FormatRealRoundTrips) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1.0), "1");
  EXPECT_EQ(format_real(kInf), "INF");
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = uniform01(rng) * std::pow(10.0, static_cast<double>(uniform_below(rng, 20)) - 10);
    ASSERT_EQ(std::stod(format_real(v)), v);
  }
}

TEST(Csv, FieldQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, WriterEmitsHeaderAndRows) {
  std::vector<HallucinationReport> rows{
      HallucinationReport::make("x,y", MetricKind::kStray, 0.5, 0.25)};
  std::ostringstream os;
  write_reports_csv(os, rows);
  EXPECT_EQ(os.str(), "input,metric_kind,value,threshold,violated\n\"x,y\",Stray,0.5,0.25,true\n");
}

}  // namespace
}  // namespace hallab
