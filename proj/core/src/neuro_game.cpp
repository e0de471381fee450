// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/neuro_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "hallab/clm.hpp"
#include "hallab/error.hpp"
#include "hallab/metrics.hpp"

namespace hallab::neuro {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

MatrixXd normal_matrix(int rows, int cols, Rng& rng, double scale) {
  MatrixXd m(rows, cols);
  // Column-major fill order is part of the seeded contract.
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = scale * standard_normal(rng);
  }
  return m;
}

VectorXd normal_vector(int n, Rng& rng, double scale) {
  return normal_matrix(n, 1, rng, scale).col(0);
}

void require_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) fail(ErrorCode::kNumeric, std::string("non-finite ") + what);
}

void check_dim(const Cortex& c, const VectorXd& x) {
  if (x.size() != c.data_dim()) fail(ErrorCode::kDimension, "input dimension does not match model");
}

// Per-point quantities shared by the ELBO and its gradient.
struct Encoded {
  VectorXd mu;
  VectorXd ell;
  VectorXd var;
  VectorXd residual;  // x - W mu - b
  VectorXd col_sq;    // squared column norms of W
};

Encoded encode(const Cortex& c, const VectorXd& x) {
  Encoded e;
  e.mu = c.A * x + c.a;
  e.ell = c.C * x + c.c;
  e.var = e.ell.array().exp();
  e.residual = x - c.W * e.mu - c.b;
  e.col_sq = c.W.colwise().squaredNorm().transpose();
  return e;
}

double kl_to_prior(const Encoded& e) {
  return 0.5 * (e.var.array() + e.mu.array().square() - 1.0 - e.ell.array()).sum();
}

void accumulate_kl_grad(const Encoded& e, const VectorXd& x, double weight, Cortex& g) {
  // d KL / d mu = mu; d KL / d ell = (var - 1) / 2.
  const VectorXd dmu = e.mu;
  const VectorXd dell = 0.5 * (e.var.array() - 1.0).matrix();
  g.A.noalias() += weight * dmu * x.transpose();
  g.a += weight * dmu;
  g.C.noalias() += weight * dell * x.transpose();
  g.c += weight * dell;
}

Cortex zeros_like(const Cortex& c) {
  return Cortex::zeros(c.data_dim(), c.latent_dim(), c.classes(), c.sigma2);
}

Hippocampus zeros_like(const Hippocampus& h) {
  return Hippocampus::zeros(static_cast<int>(h.V.cols()), static_cast<int>(h.V.rows()), h.beta);
}

double kl(const VectorXd& p, const VectorXd& q) {
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return s;
}

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_exceptions(std::span<const int> ex, const MatrixXd& X) {
  for (int i : ex) {
    if (i < 0 || i >= X.cols()) fail(ErrorCode::kDomain, "exception index outside the task data");
  }
}

// Smooth part of grad (R_P + R_M) w.r.t. theta_H.
Hippocampus smooth_grad_h(const Hippocampus& h, const Task& t, std::span<const int> ex,
                          const Cortex& c) {
  Hippocampus g = zeros_like(h);
  if (ex.empty()) return g;
  const double w = 1.0 / static_cast<double>(ex.size());
  for (int i : ex) {
    const VectorXd x = t.X.col(i);
    const VectorXd ph = hippocampal_policy(h, x);
    const VectorXd pc = cortical_policy(c, x);
    VectorXd dl = -ph;  // task term: onehot - pi_H
    dl[t.labels[static_cast<std::size_t>(i)]] += 1.0;
    const double k = kl(ph, pc);
    for (int j = 0; j < ph.size(); ++j) {
      dl[j] -= ph[j] * (std::log(ph[j]) - std::log(pc[j]) - k);
    }
    g.V.noalias() += w * dl * x.transpose();
    g.v += w * dl;
  }
  return g;
}

}  // namespace

Cortex Cortex::zeros(int d, int k, int classes, double sigma2) {
  if (d < 1 || k < 1 || classes < 2) fail(ErrorCode::kDimension, "cortex dimensions too small");
  Cortex c;
  c.A = MatrixXd::Zero(k, d);
  c.a = VectorXd::Zero(k);
  c.C = MatrixXd::Zero(k, d);
  c.c = VectorXd::Zero(k);
  c.W = MatrixXd::Zero(d, k);
  c.b = VectorXd::Zero(d);
  c.R = MatrixXd::Zero(classes, k);
  c.r = VectorXd::Zero(classes);
  c.sigma2 = sigma2;
  return c;
}

Cortex Cortex::random(int d, int k, int classes, double sigma2, Rng& rng, double scale) {
  Cortex c = zeros(d, k, classes, sigma2);
  c.A = normal_matrix(k, d, rng, scale);
  c.a = normal_vector(k, rng, scale);
  c.C = normal_matrix(k, d, rng, scale);
  c.c = normal_vector(k, rng, scale);
  c.W = normal_matrix(d, k, rng, scale);
  c.b = normal_vector(d, rng, scale);
  c.R = normal_matrix(classes, k, rng, scale);
  c.r = normal_vector(classes, rng, scale);
  return c;
}

void Cortex::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail(ErrorCode::kNumeric, "sigma2 must be positive");
  require_finite(A, "encoder weights");
  require_finite(a, "encoder bias");
  require_finite(C, "encoder log-variance weights");
  require_finite(c, "encoder log-variance bias");
  require_finite(W, "decoder weights");
  require_finite(b, "decoder bias");
  require_finite(R, "read-out weights");
  require_finite(r, "read-out bias");
}

Hippocampus Hippocampus::zeros(int d, int classes, double beta) {
  if (beta < 0.0) fail(ErrorCode::kDomain, "sparsity weight must be non-negative");
  return Hippocampus{MatrixXd::Zero(classes, d), VectorXd::Zero(classes), beta};
}

Hippocampus Hippocampus::random(int d, int classes, double beta, Rng& rng, double scale) {
  auto h = zeros(d, classes, beta);
  h.V = normal_matrix(classes, d, rng, scale);
  h.v = normal_vector(classes, rng, scale);
  return h;
}

double Hippocampus::l1_norm() const { return V.cwiseAbs().sum() + v.cwiseAbs().sum(); }

VectorXd pack(const Cortex& c) {
  std::vector<double> out;
  auto put = [&](const auto& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, j));
    }
  };
  put(c.A);
  put(c.a);
  put(c.C);
  put(c.c);
  put(c.W);
  put(c.b);
  put(c.R);
  put(c.r);
  return Eigen::Map<VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Cortex unpack(const VectorXd& flat, const Cortex& shape) {
  Cortex c = shape;
  Eigen::Index pos = 0;
  auto take = [&](auto& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (pos >= flat.size()) fail(ErrorCode::kDimension, "flat cortex vector too short");
        m(i, j) = flat[pos++];
      }
    }
  };
  take(c.A);
  take(c.a);
  take(c.C);
  take(c.c);
  take(c.W);
  take(c.b);
  take(c.R);
  take(c.r);
  if (pos != flat.size()) fail(ErrorCode::kDimension, "flat cortex vector too long");
  return c;
}

VectorXd pack(const Hippocampus& h) {
  VectorXd out(h.V.size() + h.v.size());
  out.head(h.V.size()) = Eigen::Map<const VectorXd>(h.V.data(), h.V.size());
  out.tail(h.v.size()) = h.v;
  return out;
}

Hippocampus unpack(const VectorXd& flat, const Hippocampus& shape) {
  if (flat.size() != shape.V.size() + shape.v.size()) {
    fail(ErrorCode::kDimension, "flat hippocampus vector has the wrong length");
  }
  Hippocampus h = shape;
  h.V = Eigen::Map<const MatrixXd>(flat.data(), shape.V.rows(), shape.V.cols());
  h.v = flat.tail(shape.v.size());
  return h;
}

VectorXd softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

double elbo(const Cortex& c, const VectorXd& x) {
  c.validate();
  check_dim(c, x);
  const auto e = encode(c, x);
  const double d = static_cast<double>(c.data_dim());
  const double recon = -0.5 * d * (kLog2Pi + std::log(c.sigma2)) -
                       (e.residual.squaredNorm() + e.var.dot(e.col_sq)) / (2.0 * c.sigma2);
  return recon - kl_to_prior(e);
}

double surprise(const Cortex& c, const VectorXd& x) {
  c.validate();
  check_dim(c, x);
  return std::max(0.0, kl_to_prior(encode(c, x)));
}

double log_marginal(const Cortex& c, const VectorXd& x) {
  c.validate();
  check_dim(c, x);
  const int d = c.data_dim();
  const MatrixXd cov = c.W * c.W.transpose() + c.sigma2 * MatrixXd::Identity(d, d);
  const Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) fail(ErrorCode::kNumeric, "marginal covariance not positive definite");
  const VectorXd diff = x - c.b;
  const VectorXd y = llt.matrixL().solve(diff);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(d) * kLog2Pi + logdet + y.squaredNorm());
}

VectorXd cortical_policy(const Cortex& c, const VectorXd& x) {
  return softmax(c.R * (c.A * x + c.a) + c.r);
}

VectorXd hippocampal_policy(const Hippocampus& h, const VectorXd& x) {
  return softmax(h.V * x + h.v);
}

Cortex with_exact_posterior_encoder(Cortex c) {
  const int k = c.latent_dim();
  const MatrixXd precision = MatrixXd::Identity(k, k) + c.W.transpose() * c.W / c.sigma2;
  c.A = precision.inverse() * c.W.transpose() / c.sigma2;
  c.a = -c.A * c.b;
  c.C.setZero();
  c.c = -precision.diagonal().array().log();
  return c;
}

Task two_cluster_task(int n, int d, double separation, double spread, std::uint64_t seed) {
  if (n < 2 || d < 1) fail(ErrorCode::kDimension, "task needs n >= 2 and d >= 1");
  Rng rng(seed);
  Task t;
  t.classes = 2;
  t.X = MatrixXd::Zero(d, n);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    t.labels.push_back(label);
    for (int j = 0; j < d; ++j) t.X(j, i) = spread * standard_normal(rng);
    t.X(0, i) += label == 0 ? -separation : separation;
  }
  return t;
}

double reward_g(const Cortex& c, const MatrixXd& X) {
  if (X.cols() == 0) fail(ErrorCode::kDomain, "generative reward over no data");
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.cols(); ++i) s += elbo(c, X.col(i));
  return s / static_cast<double>(X.cols());
}

double reward_e(const Cortex& c, const MatrixXd& X, std::span<const int> exceptions) {
  check_exceptions(exceptions, X);
  if (exceptions.empty()) return 0.0;
  double s = 0.0;
  for (int i : exceptions) s += surprise(c, X.col(i));
  return s / static_cast<double>(exceptions.size());
}

double reward_p(const Hippocampus& h, const Task& t, std::span<const int> exceptions) {
  check_exceptions(exceptions, t.X);
  if (exceptions.empty()) return 0.0;
  double s = 0.0;
  for (int i : exceptions) {
    const VectorXd p = hippocampal_policy(h, t.X.col(i));
    s += std::log(p[t.labels[static_cast<std::size_t>(i)]]);
  }
  return s / static_cast<double>(exceptions.size());
}

double distill_loss(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                    std::span<const int> exceptions) {
  check_exceptions(exceptions, X);
  if (exceptions.empty()) return 0.0;
  double s = 0.0;
  for (int i : exceptions) {
    s += kl(hippocampal_policy(h, X.col(i)), cortical_policy(c, X.col(i)));
  }
  return s / static_cast<double>(exceptions.size());
}

double reward_m(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                std::span<const int> exceptions) {
  return -distill_loss(h, c, X, exceptions) - h.beta * h.l1_norm();
}

Cortex grad_g(const Cortex& c, const MatrixXd& X) {
  c.validate();
  if (X.cols() == 0) fail(ErrorCode::kDomain, "generative reward over no data");
  if (X.rows() != c.data_dim()) fail(ErrorCode::kDimension, "data dimension does not match model");
  Cortex g = zeros_like(c);
  const double w = 1.0 / static_cast<double>(X.cols());
  const double inv_s2 = 1.0 / c.sigma2;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const VectorXd x = X.col(i);
    const auto e = encode(c, x);
    // Reconstruction part.
    const VectorXd dmu = c.W.transpose() * e.residual * inv_s2;
    const VectorXd dell = -0.5 * inv_s2 * e.var.cwiseProduct(e.col_sq);
    g.A.noalias() += w * dmu * x.transpose();
    g.a += w * dmu;
    g.C.noalias() += w * dell * x.transpose();
    g.c += w * dell;
    g.W.noalias() += w * inv_s2 * (e.residual * e.mu.transpose() - c.W * e.var.asDiagonal());
    g.b += w * inv_s2 * e.residual;
    // Minus the KL part.
    accumulate_kl_grad(e, x, -w, g);
  }
  return g;
}

Cortex grad_e(const Cortex& c, const MatrixXd& X, std::span<const int> exceptions) {
  c.validate();
  check_exceptions(exceptions, X);
  Cortex g = zeros_like(c);
  if (exceptions.empty()) return g;
  const double w = 1.0 / static_cast<double>(exceptions.size());
  for (int i : exceptions) {
    const VectorXd x = X.col(i);
    accumulate_kl_grad(encode(c, x), x, w, g);
  }
  return g;
}

Hippocampus grad_p(const Hippocampus& h, const Task& t, std::span<const int> exceptions) {
  check_exceptions(exceptions, t.X);
  Hippocampus g = zeros_like(h);
  if (exceptions.empty()) return g;
  const double w = 1.0 / static_cast<double>(exceptions.size());
  for (int i : exceptions) {
    const VectorXd x = t.X.col(i);
    VectorXd dl = -hippocampal_policy(h, x);
    dl[t.labels[static_cast<std::size_t>(i)]] += 1.0;
    g.V.noalias() += w * dl * x.transpose();
    g.v += w * dl;
  }
  return g;
}

Hippocampus grad_m(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                   std::span<const int> exceptions) {
  check_exceptions(exceptions, X);
  Hippocampus g = zeros_like(h);
  if (!exceptions.empty()) {
    const double w = 1.0 / static_cast<double>(exceptions.size());
    for (int i : exceptions) {
      const VectorXd x = X.col(i);
      const VectorXd ph = hippocampal_policy(h, x);
      const VectorXd pc = cortical_policy(c, x);
      const double k = kl(ph, pc);
      VectorXd dl(ph.size());
      for (int j = 0; j < ph.size(); ++j) {
        dl[j] = -ph[j] * (std::log(ph[j]) - std::log(pc[j]) - k);
      }
      g.V.noalias() += w * dl * x.transpose();
      g.v += w * dl;
    }
  }
  g.V -= h.beta * h.V.unaryExpr(&sign0);
  g.v -= h.beta * h.v.unaryExpr(&sign0);
  return g;
}

Cortex grad_distill(const Hippocampus& h, const Cortex& c, const MatrixXd& X,
                    std::span<const int> exceptions) {
  check_exceptions(exceptions, X);
  Cortex g = zeros_like(c);
  if (exceptions.empty()) return g;
  const double w = 1.0 / static_cast<double>(exceptions.size());
  for (int i : exceptions) {
    const VectorXd x = X.col(i);
    const VectorXd mu = c.A * x + c.a;
    const VectorXd diff = cortical_policy(c, x) - hippocampal_policy(h, x);
    g.R.noalias() += w * diff * mu.transpose();
    g.r += w * diff;
  }
  return g;
}

std::vector<int> select_exceptions(const Cortex& c, const MatrixXd& X, int k) {
  if (k < 0 || k > X.cols()) fail(ErrorCode::kDomain, "exception count outside [0, |D|]");
  std::vector<double> s(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.cols(); ++i) s[static_cast<std::size_t>(i)] = surprise(c, X.col(i));
  std::vector<int> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)];
  });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

int exceptions_above_quantile(const Cortex& c, const MatrixXd& X, double quantile) {
  if (!(quantile >= 0.0 && quantile <= 1.0)) fail(ErrorCode::kDomain, "quantile outside [0,1]");
  if (X.cols() == 0) return 0;
  std::vector<double> s(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.cols(); ++i) s[static_cast<std::size_t>(i)] = surprise(c, X.col(i));
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  const double pos = quantile * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double cut = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  return static_cast<int>(std::count_if(s.begin(), s.end(), [&](double v) { return v > cut; }));
}

Hippocampus hippocampal_step(const Hippocampus& h, const Task& t, std::span<const int> exceptions,
                             const Cortex& c, double learn_rate) {
  if (learn_rate < 0.0) fail(ErrorCode::kDomain, "learn rate must be non-negative");
  if (exceptions.empty()) fail(ErrorCode::kDomain, "hippocampal step needs exception data");
  check_exceptions(exceptions, t.X);
  const auto g = smooth_grad_h(h, t, exceptions, c);
  Hippocampus out = h;
  out.V += learn_rate * g.V;
  out.v += learn_rate * g.v;
  const double thr = learn_rate * h.beta;
  auto shrink = [thr](double v) { return sign0(v) * std::max(std::abs(v) - thr, 0.0); };
  if (thr > 0.0) {
    out.V = out.V.unaryExpr(shrink);
    out.v = out.v.unaryExpr(shrink);
  }
  return out;
}

Cortex consolidate(const Cortex& c, const Hippocampus& h, const MatrixXd& X,
                   std::span<const int> exceptions, const MatrixXd& replay, int steps,
                   double learn_rate) {
  if (steps < 0) fail(ErrorCode::kDomain, "consolidation steps must be non-negative");
  Cortex out = c;
  for (int s = 0; s < steps; ++s) {
    if (!exceptions.empty()) {
      const auto g = grad_distill(h, out, X, exceptions);
      out.R -= learn_rate * g.R;
      out.r -= learn_rate * g.r;
    }
    if (replay.cols() > 0) {
      const auto g = grad_g(out, replay);
      out.A += learn_rate * g.A;
      out.a += learn_rate * g.a;
      out.C += learn_rate * g.C;
      out.c += learn_rate * g.c;
    }
  }
  return out;
}

MatrixXd generate_replay(const Cortex& c, const MatrixXd& z, const MatrixXd& eps) {
  if (z.rows() != c.latent_dim() || eps.rows() != c.data_dim() || z.cols() != eps.cols()) {
    fail(ErrorCode::kDimension, "replay noise shape does not match model");
  }
  return (c.W * z).colwise() + c.b + std::sqrt(c.sigma2) * eps;
}

void GameConfig::validate() const {
  if (latent_dim < 1) fail(ErrorCode::kDomain, "latent_dim must be >= 1");
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomain, "sigma2 must be positive");
  if (beta < 0.0) fail(ErrorCode::kDomain, "beta must be non-negative");
  if (cortical_steps < 0 || timescale_ratio < 0 || consolidation_steps < 0) {
    fail(ErrorCode::kDomain, "step counts must be non-negative");
  }
  if (consolidate_every < 1) fail(ErrorCode::kDomain, "consolidate_every must be >= 1");
  if (replay_size < 0) fail(ErrorCode::kDomain, "replay_size must be non-negative");
  if (!(exception_quantile >= 0.0 && exception_quantile <= 1.0)) {
    fail(ErrorCode::kDomain, "exception_quantile outside [0,1]");
  }
  if (!(tol >= 0.0)) fail(ErrorCode::kDomain, "tol must be non-negative");
  if (max_rounds < 1) fail(ErrorCode::kDomain, "max_rounds must be >= 1");
}

MatrixXd GameState::generative_data() const {
  if (replay.cols() == 0) return task.X;
  MatrixXd all(task.X.rows(), task.X.cols() + replay.cols());
  all << task.X, replay;
  return all;
}

namespace {

GameState base_state(Task task, const GameConfig& cfg, Rng& rng) {
  cfg.validate();
  if (task.X.cols() == 0) fail(ErrorCode::kDomain, "task has no data");
  if (static_cast<Eigen::Index>(task.labels.size()) != task.X.cols()) {
    fail(ErrorCode::kDimension, "one label per data point required");
  }
  for (int y : task.labels) {
    if (y < 0 || y >= task.classes) fail(ErrorCode::kDomain, "label outside the class range");
  }
  GameState s;
  const int d = static_cast<int>(task.X.rows());
  s.replay_z = normal_matrix(cfg.latent_dim, cfg.replay_size, rng, 1.0);
  s.replay_eps = normal_matrix(d, cfg.replay_size, rng, 1.0);
  s.replay = MatrixXd(d, 0);
  s.task = std::move(task);
  return s;
}

}  // namespace

GameState initial_state(Task task, const GameConfig& cfg) {
  Rng rng(cfg.seed);
  auto s = base_state(std::move(task), cfg, rng);
  const int d = static_cast<int>(s.task.X.rows());
  s.cortex = Cortex::random(d, cfg.latent_dim, s.task.classes, cfg.sigma2, rng, cfg.init_scale);
  s.hippo = Hippocampus::random(d, s.task.classes, cfg.beta, rng, cfg.init_scale);
  return s;
}

GameState trivial_state(Task task, const GameConfig& cfg) {
  Rng rng(cfg.seed);
  auto s = base_state(std::move(task), cfg, rng);
  const int d = static_cast<int>(s.task.X.rows());
  s.cortex = Cortex::zeros(d, cfg.latent_dim, s.task.classes, cfg.sigma2);
  s.cortex.b = s.task.X.rowwise().mean();
  s.hippo = Hippocampus::zeros(d, s.task.classes, cfg.beta);
  return s;
}

Rewards evaluate_rewards(const GameState& s) {
  Rewards r;
  r.g = reward_g(s.cortex, s.generative_data());
  r.e = reward_e(s.cortex, s.task.X, s.exceptions);
  r.p = reward_p(s.hippo, s.task, s.exceptions);
  r.m = reward_m(s.hippo, s.cortex, s.task.X, s.exceptions);
  return r;
}

namespace {

double max_change(const Rewards& a, const Rewards& b) {
  return std::max({std::abs(a.g - b.g), std::abs(a.e - b.e), std::abs(a.p - b.p),
                   std::abs(a.m - b.m)});
}

bool finite(const Rewards& r) {
  return std::isfinite(r.g) && std::isfinite(r.e) && std::isfinite(r.p) && std::isfinite(r.m);
}

}  // namespace

HneReport solve_hne(GameState& state, const GameConfig& cfg) {
  cfg.validate();
  HneReport report;
  auto prev = evaluate_rewards(state);
  report.trace.push_back({state.round, prev, static_cast<int>(state.exceptions.size()), 0.0});
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    try {
      // G: slow ascent of the ELBO on encoder and decoder.
      const MatrixXd data = state.generative_data();
      for (int i = 0; i < cfg.cortical_steps; ++i) {
        const auto g = grad_g(state.cortex, data);
        state.cortex.A += cfg.cortical_learn_rate * g.A;
        state.cortex.a += cfg.cortical_learn_rate * g.a;
        state.cortex.C += cfg.cortical_learn_rate * g.C;
        state.cortex.c += cfg.cortical_learn_rate * g.c;
        state.cortex.W += cfg.cortical_learn_rate * g.W;
        state.cortex.b += cfg.cortical_learn_rate * g.b;
      }
      // E: best response.
      const int k = exceptions_above_quantile(state.cortex, state.task.X, cfg.exception_quantile);
      state.exceptions = select_exceptions(state.cortex, state.task.X, k);
      // P/M: fast hippocampal steps.
      if (!state.exceptions.empty()) {
        const int steps = cfg.cortical_steps * cfg.timescale_ratio;
        for (int i = 0; i < steps; ++i) {
          state.hippo = hippocampal_step(state.hippo, state.task, state.exceptions, state.cortex,
                                         cfg.hippocampal_learn_rate);
        }
      }
      // Consolidation (nothing to integrate without exceptions).
      if (round % cfg.consolidate_every == 0 && !state.exceptions.empty()) {
        state.replay = generate_replay(state.cortex, state.replay_z, state.replay_eps);
        state.cortex = consolidate(state.cortex, state.hippo, state.task.X, state.exceptions,
                                   state.replay, cfg.consolidation_steps,
                                   cfg.consolidation_learn_rate);
      }
      state.cortex.validate();
    } catch (const Error& e) {
      fail(ErrorCode::kNumeric, "diverged in round " + std::to_string(round) + ": " + e.what());
    }
    state.round = round;
    const auto now = evaluate_rewards(state);
    if (!finite(now)) fail(ErrorCode::kNumeric, "non-finite reward in round " + std::to_string(round));
    const double change = max_change(now, prev);
    report.trace.push_back({round, now, static_cast<int>(state.exceptions.size()), change});
    report.rounds = round;
    report.final_change = change;
    prev = now;
    if (change < cfg.tol || std::isinf(cfg.tol)) {
      report.converged = true;
      break;
    }
  }
  return report;
}

bool StabilityReport::stable(double tol) const {
  const double bound = tol + 1e-8;
  return max_gain_g <= bound && max_gain_h <= bound && max_gain_e <= bound;
}

StabilityReport check_stability(const GameState& state, int directions, double norm,
                                std::uint64_t seed) {
  if (directions < 1 || !(norm > 0.0)) fail(ErrorCode::kDomain, "invalid perturbation setup");
  Rng rng(seed);
  StabilityReport rep;
  rep.max_gain_g = rep.max_gain_h = rep.max_gain_e = -std::numeric_limits<double>::infinity();
  const MatrixXd data = state.generative_data();
  const double g0 = reward_g(state.cortex, data);
  const VectorXd c0 = pack(state.cortex);
  const auto h_reward = [&](const Hippocampus& h) {
    return reward_p(h, state.task, state.exceptions) +
           reward_m(h, state.cortex, state.task.X, state.exceptions);
  };
  const double h0 = h_reward(state.hippo);
  const VectorXd hv0 = pack(state.hippo);
  for (int i = 0; i < directions; ++i) {
    VectorXd u = normal_vector(static_cast<int>(c0.size()), rng, 1.0);
    u *= norm / u.norm();
    rep.max_gain_g = std::max(rep.max_gain_g, reward_g(unpack(c0 + u, state.cortex), data) - g0);
    VectorXd w = normal_vector(static_cast<int>(hv0.size()), rng, 1.0);
    w *= norm / w.norm();
    rep.max_gain_h = std::max(rep.max_gain_h, h_reward(unpack(hv0 + w, state.hippo)) - h0);
  }
  // E deviates by swapping one member for one non-member.
  const auto& ex = state.exceptions;
  const double e0 = reward_e(state.cortex, state.task.X, ex);
  rep.max_gain_e = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    for (int j = 0; j < state.task.X.cols(); ++j) {
      if (std::binary_search(ex.begin(), ex.end(), j)) continue;
      auto alt = ex;
      alt[i] = j;
      rep.max_gain_e = std::max(rep.max_gain_e, reward_e(state.cortex, state.task.X, alt) - e0);
    }
  }
  return rep;
}

Plm export_snapshot(const Cortex& c, const OutputSpace& space) {
  c.validate();
  if (static_cast<int>(space.size()) != c.classes()) {
    fail(ErrorCode::kDimension, "output space size must equal the read-out classes");
  }
  clm::AffineSoftmaxHead head;
  head.input_dim = static_cast<std::uint32_t>(c.data_dim());
  head.latent_dim = static_cast<std::uint32_t>(c.latent_dim());
  head.classes = static_cast<std::uint32_t>(c.classes());
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor a = c.A;
  const RowMajor r = c.R;
  head.encoder.assign(a.data(), a.data() + a.size());
  head.encoder_bias.assign(c.a.data(), c.a.data() + c.a.size());
  head.readout.assign(r.data(), r.data() + r.size());
  head.readout_bias.assign(c.r.data(), c.r.data() + c.r.size());
  return clm::Snapshot{space, head, {}}.encode();
}

void write_reward_trace_csv(std::ostream& os, std::span<const RoundRecord> trace) {
  os << "round,R_G,R_E,R_P,R_M,exceptions,max_change\n";
  for (const auto& t : trace) {
    os << t.round << ',' << format_real(t.rewards.g) << ',' << format_real(t.rewards.e) << ','
       << format_real(t.rewards.p) << ',' << format_real(t.rewards.m) << ',' << t.exceptions
       << ',' << format_real(t.max_change) << '\n';
  }
}

}  // namespace hallab::neuro
