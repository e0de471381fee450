// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "hallab/neuro_game.hpp"
#include "support.hpp"

namespace hallab::neuro {
namespace {

using testing::code_of;

MatrixXd random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = scale * standard_normal(rng);
  }
  return m;
}

std::vector<int> random_subset(int n, Rng& rng) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (uniform_below(rng, 2)) out.push_back(i);
  }
  if (out.empty()) out.push_back(0);
  return out;
}

using testing::worst_rel_error;

struct Config {
  Cortex cortex;
  Hippocampus hippo;
  Task task;
  std::vector<int> exceptions;
};

Config random_config(Rng& rng) {
  const int d = 1 + static_cast<int>(uniform_below(rng, 3));
  const int k = 1 + static_cast<int>(uniform_below(rng, 2));
  const int n = 2 + static_cast<int>(uniform_below(rng, 5));
  Config cfg{Cortex::random(d, k, 2, 0.2 + uniform01(rng), rng),
             Hippocampus::random(d, 2, 0.01 + 0.1 * uniform01(rng), rng),
             Task{random_matrix(d, n, rng), {}, 2},
             {}};
  for (int i = 0; i < n; ++i) cfg.task.labels.push_back(static_cast<int>(uniform_below(rng, 2)));
  cfg.exceptions = random_subset(n, rng);
  return cfg;
}

TEST(Gradients, GenerativeMatchesFiniteDifferences) {
  Rng rng(101);
  for (int i = 0; i < 100; ++i) {
    const auto c = random_config(rng);
    const auto f = [&](const VectorXd& v) { return reward_g(unpack(v, c.cortex), c.task.X); };
    VectorXd g = pack(grad_g(c.cortex, c.task.X));
    ASSERT_LT(worst_rel_error(f, pack(c.cortex), g), 1e-4) << i;
  }
}

TEST(Gradients, SurpriseMatchesFiniteDifferences) {
  Rng rng(102);
  for (int i = 0; i < 100; ++i) {
    const auto c = random_config(rng);
    const auto f = [&](const VectorXd& v) {
      return reward_e(unpack(v, c.cortex), c.task.X, c.exceptions);
    };
    ASSERT_LT(worst_rel_error(f, pack(c.cortex), pack(grad_e(c.cortex, c.task.X, c.exceptions))),
              1e-4)
        << i;
  }
}

TEST(Gradients, TaskRewardMatchesFiniteDifferences) {
  Rng rng(103);
  for (int i = 0; i < 100; ++i) {
    const auto c = random_config(rng);
    const auto f = [&](const VectorXd& v) {
      return reward_p(unpack(v, c.hippo), c.task, c.exceptions);
    };
    ASSERT_LT(worst_rel_error(f, pack(c.hippo), pack(grad_p(c.hippo, c.task, c.exceptions))), 1e-4)
        << i;
  }
}

TEST(Gradients, ConsistencyRewardMatchesFiniteDifferences) {
  Rng rng(104);
  for (int i = 0; i < 100; ++i) {
    const auto c = random_config(rng);
    const auto f = [&](const VectorXd& v) {
      return reward_m(unpack(v, c.hippo), c.cortex, c.task.X, c.exceptions);
    };
    const auto g = pack(grad_m(c.hippo, c.cortex, c.task.X, c.exceptions));
    ASSERT_LT(worst_rel_error(f, pack(c.hippo), g), 1e-4) << i;
  }
}

TEST(Gradients, DistillationMatchesFiniteDifferences) {
  Rng rng(105);
  for (int i = 0; i < 50; ++i) {
    const auto c = random_config(rng);
    const auto f = [&](const VectorXd& v) {
      return distill_loss(c.hippo, unpack(v, c.cortex), c.task.X, c.exceptions);
    };
    // Only the read-out block (R, r: the packed tail) is populated.
    const VectorXd at = pack(c.cortex);
    const VectorXd g = pack(grad_distill(c.hippo, c.cortex, c.task.X, c.exceptions));
    const auto tail = c.cortex.R.size() + c.cortex.r.size();
    const auto head = at.size() - tail;
    ASSERT_EQ(g.head(head).cwiseAbs().maxCoeff(), 0.0);
    const auto f_tail = [&](const VectorXd& v) {
      VectorXd full = at;
      full.tail(tail) = v;
      return f(full);
    };
    ASSERT_LT(worst_rel_error(f_tail, at.tail(tail), g.tail(tail)), 1e-4) << i;
  }
}

TEST(Elbo, BelowMarginalOnRandomSamples) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const int d = 1 + static_cast<int>(uniform_below(rng, 4));
    const int k = 1 + static_cast<int>(uniform_below(rng, 3));
    const auto c = Cortex::random(d, k, 2, 0.1 + uniform01(rng), rng);
    const VectorXd x = random_matrix(d, 1, rng, 2.0).col(0);
    ASSERT_LE(elbo(c, x), log_marginal(c, x) + 1e-9);
  }
}

TEST(Elbo, EqualsMarginalWithExactEncoder) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const int d = 2 + static_cast<int>(uniform_below(rng, 3));
    const int k = 1 + static_cast<int>(uniform_below(rng, 2));
    auto c = Cortex::random(d, k, 2, 0.3, rng);
    // Orthogonal columns with distinct scales.
    const Eigen::HouseholderQR<MatrixXd> qr(random_matrix(d, k, rng));
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, k);
    for (int j = 0; j < k; ++j) c.W.col(j) = q.col(j) * (0.5 + j);
    c = with_exact_posterior_encoder(c);
    const VectorXd x = random_matrix(d, 1, rng).col(0);
    ASSERT_NEAR(elbo(c, x), log_marginal(c, x), 1e-9);
  }
}

TEST(Surprise, PriorVarianceGivesHalfSquaredMean) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    auto c = Cortex::random(3, 2, 2, 1.0, rng);
    c.C.setZero();
    c.c.setZero();
    const VectorXd x = random_matrix(3, 1, rng).col(0);
    const VectorXd mu = c.A * x + c.a;
    ASSERT_NEAR(surprise(c, x), 0.5 * mu.squaredNorm(), 1e-12);
  }
}

TEST(Exceptions, TopKMatchesSubsetSearch) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 8;
    const auto c = Cortex::random(2, 1, 2, 0.5, rng);
    const MatrixXd X = random_matrix(2, n, rng);
    for (int k = 0; k <= n; ++k) {
      const auto got = select_exceptions(c, X, k);
      ASSERT_EQ(static_cast<int>(got.size()), k);
      ASSERT_TRUE(std::is_sorted(got.begin(), got.end()));
      if (k == 0) continue;
      // Brute force over every k-subset: the selection maximizes R_E.
      double best = -std::numeric_limits<double>::infinity();
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        std::vector<int> subset;
        for (int i = 0; i < n; ++i) {
          if (mask & (1u << i)) subset.push_back(i);
        }
        best = std::max(best, reward_e(c, X, subset));
      }
      ASSERT_NEAR(reward_e(c, X, got), best, 1e-12);
    }
  }
}

TEST(Exceptions, QuantileCount) {
  Cortex c = Cortex::zeros(1, 1, 2, 1.0);
  c.A(0, 0) = 1.0;
  MatrixXd X(1, 5);
  X << 0, 1, 2, 3, 4;  // surprise x^2/2 is increasing
  EXPECT_EQ(exceptions_above_quantile(c, X, 0.8), 1);
  EXPECT_EQ(exceptions_above_quantile(c, X, 0.5), 2);
  EXPECT_EQ(exceptions_above_quantile(c, X, 1.0), 0);
  EXPECT_EQ(select_exceptions(c, X, 2), (std::vector<int>{3, 4}));
}

TEST(Rewards, EmptyExceptionsAreZero) {
  Rng rng(11);
  const auto c = random_config(rng);
  const std::vector<int> none;
  EXPECT_EQ(reward_e(c.cortex, c.task.X, none), 0.0);
  EXPECT_EQ(reward_p(c.hippo, c.task, none), 0.0);
  EXPECT_EQ(reward_m(c.hippo, c.cortex, c.task.X, none), -c.hippo.beta * c.hippo.l1_norm());
  const std::vector<int> bad{99};
  EXPECT_ANY_THROW(reward_e(c.cortex, c.task.X, bad));
}

TEST(Pack, RoundTrip) {
  Rng rng(12);
  const auto c = Cortex::random(3, 2, 4, 0.5, rng);
  const auto back = unpack(pack(c), c);
  EXPECT_EQ(pack(back), pack(c));
  EXPECT_EQ(back.sigma2, c.sigma2);
  const auto h = Hippocampus::random(3, 4, 0.1, rng);
  EXPECT_EQ(pack(unpack(pack(h), h)), pack(h));
}

TEST(Cortex, ValidateRejectsNonFinite) {
  auto c = Cortex::zeros(2, 1, 2, 1.0);
  c.W(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kNumeric);
  auto s = Cortex::zeros(2, 1, 2, 0.0);
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kNumeric);
}

TEST(Game, TrivialStateIsAFixedPoint) {
  GameConfig cfg;
  auto st = trivial_state(two_cluster_task(40, 2, 2.0, 0.5, 3), cfg);
  const auto before = pack(st.cortex);
  const auto rep = solve_hne(st, cfg);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.rounds, 1);
  EXPECT_LT((pack(st.cortex) - before).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Game, InfiniteToleranceStopsAfterOneRound) {
  GameConfig cfg;
  cfg.tol = std::numeric_limits<double>::infinity();
  auto st = initial_state(two_cluster_task(40, 2, 2.0, 0.5, 3), cfg);
  const auto rep = solve_hne(st, cfg);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.rounds, 1);
  EXPECT_EQ(rep.trace.size(), 2u);
}

TEST(Game, ZeroLearningRatesLeaveParametersUnchanged) {
  GameConfig cfg;
  cfg.cortical_learn_rate = 0.0;
  cfg.hippocampal_learn_rate = 0.0;
  cfg.consolidation_learn_rate = 0.0;
  cfg.beta = 0.0;
  cfg.max_rounds = 1;
  auto st = initial_state(two_cluster_task(30, 2, 2.0, 0.5, 4), cfg);
  const auto c0 = pack(st.cortex);
  const auto h0 = pack(st.hippo);
  solve_hne(st, cfg);
  EXPECT_EQ(pack(st.cortex), c0);
  EXPECT_EQ(pack(st.hippo), h0);
}

TEST(Game, DefaultConvergesAndIsStable) {
  GameConfig cfg;
  auto st = initial_state(two_cluster_task(100, 2, 1.0, 0.5, 7), cfg);
  const auto rep = solve_hne(st, cfg);
  ASSERT_TRUE(rep.converged);
  EXPECT_LT(rep.final_change, cfg.tol);
  EXPECT_EQ(rep.trace.size(), static_cast<std::size_t>(rep.rounds) + 1);
  EXPECT_TRUE(check_stability(st, 20, 1e-3, 5).stable(cfg.tol));
  const auto snap = export_snapshot(st.cortex, OutputSpace::numbered(2));
  EXPECT_EQ(snap.kind(), PlmKind::kClmSnapshot);
}

TEST(Game, DivergenceIsReportedAsNumeric) {
  GameConfig cfg;
  cfg.cortical_learn_rate = 1e6;
  auto st = initial_state(two_cluster_task(40, 2, 1.0, 0.5, 7), cfg);
  try {
    solve_hne(st, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
    EXPECT_NE(std::string(e.what()).find("round"), std::string::npos);
  }
}

TEST(Game, ConfigValidation) {
  GameConfig cfg;
  cfg.tol = -1.0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::kDomain);
  cfg = {};
  cfg.exception_quantile = 1.5;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::kDomain);
}

}  // namespace
}  // namespace hallab::neuro
