// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Hierarchical neuro-game between a slow cortical generative model, an
// exception handler, and a fast hippocampal learner, with consolidation.
//
// The cortex is a linear-Gaussian VAE, so the ELBO, its gradients and the
// exact marginal likelihood are all closed form.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hallab/plm.hpp"
#include "hallab/random.hpp"

namespace hallab::neuro {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Encoder q(z|x) = N(A x + a, diag(exp(C x + c))); decoder
/// p(x|z) = N(W z + b, sigma2 I); read-out pi_C = softmax(R mu + r).
/// Also used as the container for gradients with the same shapes.
struct Cortex {
  MatrixXd A;
  VectorXd a;
  MatrixXd C;
  VectorXd c;
  MatrixXd W;
  VectorXd b;
  MatrixXd R;
  VectorXd r;
  double sigma2 = 1.0;

  static Cortex zeros(int d, int k, int classes, double sigma2);
  static Cortex random(int d, int k, int classes, double sigma2, Rng& rng, double scale = 0.5);

  int data_dim() const { return static_cast<int>(W.rows()); }
  int latent_dim() const { return static_cast<int>(W.cols()); }
  int classes() const { return static_cast<int>(R.rows()); }
  /// Throws kNumeric on non-finite entries or sigma2 <= 0.
  void validate() const;
};

/// Affine-softmax classifier pi_H = softmax(V x + v) with L1 weight beta.
struct Hippocampus {
  MatrixXd V;
  VectorXd v;
  double beta = 0.0;

  static Hippocampus zeros(int d, int classes, double beta);
  static Hippocampus random(int d, int classes, double beta, Rng& rng, double scale = 0.5);
  double l1_norm() const;
};

/// Flattened parameters in field order (A, a, C, c, W, b, R, r).
VectorXd pack(const Cortex& c);
Cortex unpack(const VectorXd& flat, const Cortex& shape);
VectorXd pack(const Hippocampus& h);
Hippocampus unpack(const VectorXd& flat, const Hippocampus& shape);

VectorXd softmax(const VectorXd& logits);

double elbo(const Cortex& c, const VectorXd& x);
/// KL(q(z|x) || N(0, I)).
double surprise(const Cortex& c, const VectorXd& x);
/// Exact log N(x; b, W W^T + sigma2 I).
double log_marginal(const Cortex& c, const VectorXd& x);
VectorXd cortical_policy(const Cortex& c, const VectorXd& x);
VectorXd hippocampal_policy(const Hippocampus& h, const VectorXd& x);

/// Encoder that equals the exact posterior when W has orthogonal columns.
Cortex with_exact_posterior_encoder(Cortex c);

/// Data points are columns of X. Labels index classes.
struct Task {
  MatrixXd X;
  std::vector<int> labels;
  int classes = 2;
};

/// Two Gaussian clusters at +-separation along the first axis.
Task two_cluster_task(int n, int d, double separation, double spread, std::uint64_t seed);

// Rewards. Empty exception sets give zero task and consistency terms.
double reward_g(const Cortex& c, const MatrixXd& X);
double reward_e(const Cortex& c, const MatrixXd& X, std::span<const int> exceptions);
double reward_p(const Hippocampus& h, const Task& t, std::span<const int> exceptions);
double reward_m(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                std::span<const int> exceptions);

// Analytic gradients of the rewards above.
Cortex grad_g(const Cortex& c, const MatrixXd& X);
Cortex grad_e(const Cortex& c, const MatrixXd& X, std::span<const int> exceptions);
Hippocampus grad_p(const Hippocampus& h, const Task& t, std::span<const int> exceptions);
/// L1 part uses the subgradient with sign(0) = 0.
Hippocampus grad_m(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                   std::span<const int> exceptions);
/// Gradient of mean KL(pi_H || pi_C) over the exceptions w.r.t. the read-out
/// (only R and r are populated).
Cortex grad_distill(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                    std::span<const int> exceptions);
double distill_loss(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                    std::span<const int> exceptions);

/// k inputs of highest surprise (ties to the lower index), ascending.
std::vector<int> select_exceptions(const Cortex& c, const MatrixXd& X, int k);
/// Number of points strictly above the given surprise quantile (linear
/// interpolation between order statistics).
int exceptions_above_quantile(const Cortex& c, const MatrixXd& X, double quantile);

/// One ascent step on R_P + R_M. The L1 part is applied as a soft-threshold
/// (proximal) step so the iterate can settle exactly on zero.
Hippocampus hippocampal_step(const Hippocampus& h, const Task& t, std::span<const int> exceptions,
                             const Cortex& c, double learn_rate);

/// `steps` of read-out distillation toward pi_H over the exceptions plus
/// encoder ELBO ascent on the replay samples.
Cortex consolidate(const Cortex& c, const Hippocampus& h, const MatrixXd& X,
                   std::span<const int> exceptions, const MatrixXd& replay, int steps,
                   double learn_rate);

/// Replay x = W z + b + sqrt(sigma2) eps for frozen noise (z, eps columns).
MatrixXd generate_replay(const Cortex& c, const MatrixXd& z, const MatrixXd& eps);

struct GameConfig {
  int latent_dim = 1;
  double sigma2 = 0.2;
  double beta = 0.05;
  double cortical_learn_rate = 0.03;
  int cortical_steps = 10;
  int timescale_ratio = 10;  // hippocampal steps per cortical step
  double hippocampal_learn_rate = 1.0;
  int consolidation_steps = 20;
  double consolidation_learn_rate = 0.1;
  int consolidate_every = 1;
  int replay_size = 32;
  double exception_quantile = 0.8;
  double tol = 1e-6;
  int max_rounds = 200;
  double init_scale = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GameState {
  Cortex cortex;
  Hippocampus hippo;
  Task task;
  std::vector<int> exceptions;
  MatrixXd replay;        // d x m, empty until the first consolidation
  MatrixXd replay_z;      // frozen latent noise
  MatrixXd replay_eps;    // frozen observation noise
  int round = 0;

  /// Data for R_G: task points followed by the replay buffer.
  MatrixXd generative_data() const;
};

GameState initial_state(Task task, const GameConfig& cfg);
/// The trivial fixed point: W = 0, b = data mean, q = prior.
GameState trivial_state(Task task, const GameConfig& cfg);

struct Rewards {
  double g = 0.0;
  double e = 0.0;
  double p = 0.0;
  double m = 0.0;
};

Rewards evaluate_rewards(const GameState& s);

struct RoundRecord {
  int round;
  Rewards rewards;
  int exceptions;
  double max_change;
};

struct HneReport {
  bool converged = false;
  int rounds = 0;
  double final_change = 0.0;
  std::vector<RoundRecord> trace;  // round 0 is the initial state
};

/// Alternates G, E, P/M, and consolidation until every reward changes by
/// less than tol in a round. kNumeric (naming the round) on divergence.
HneReport solve_hne(GameState& state, const GameConfig& cfg);

struct StabilityReport {
  double max_gain_g = 0.0;   // R_G under cortex perturbations
  double max_gain_h = 0.0;   // R_P + R_M under hippocampus perturbations
  double max_gain_e = 0.0;   // R_E under single swaps
  bool stable(double tol) const;
};

StabilityReport check_stability(const GameState& state, int directions, double norm,
                                std::uint64_t seed);

/// Final cortex as a ClmSnapshot with an affine-softmax base rule.
Plm export_snapshot(const Cortex& c, const OutputSpace& space);

void write_reward_trace_csv(std::ostream& os, std::span<const RoundRecord> trace);

}  // namespace hallab::neuro
