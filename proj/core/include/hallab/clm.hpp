// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Continual learning machine: a sequence of snapshots linked by an update
// function that internalizes facts, plus the RAG-vs-CLM cost model.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hallab/plm.hpp"

namespace hallab::clm {

struct Fact {
  std::string input;
  std::string answer;  // a symbol of the output space, or raw bytes
  friend bool operator==(const Fact&, const Fact&) = default;
};

/// Affine encoder mean followed by an affine-softmax read-out:
/// softmax(R (A x + a) + r). Inputs are comma-separated reals.
struct AffineSoftmaxHead {
  std::uint32_t input_dim = 0;
  std::uint32_t latent_dim = 0;
  std::uint32_t classes = 0;
  std::vector<double> encoder;       // latent x input, row-major
  std::vector<double> encoder_bias;  // latent
  std::vector<double> readout;       // classes x latent, row-major
  std::vector<double> readout_bias;  // classes

  Dist eval(std::span<const double> x) const;
};

struct UniformRule {};
using BaseRule = std::variant<UniformRule, Plm, AffineSoftmaxHead>;

struct Snapshot {
  OutputSpace space;
  BaseRule base;
  std::vector<Fact> facts;  // insertion order, unique inputs

  Plm encode() const;
  static Snapshot decode(const Plm& h);
};

struct AuditEntry {
  std::uint64_t t;
  std::string input;
  std::string old_answer;
  std::string new_answer;
};

/// Immutable CLM state. An optional fact cap turns on FIFO eviction (the
/// lossy variant).
class ClmState {
 public:
  static ClmState create(OutputSpace space, BaseRule base = UniformRule{},
                         std::optional<std::size_t> fact_cap = std::nullopt);

  const Plm& current() const { return current_; }
  std::uint64_t t() const { return t_; }
  const std::vector<std::uint64_t>& capacity_history() const { return capacity_history_; }
  /// k_hat(descriptor || fact) - k_hat(descriptor) per applied update.
  const std::vector<std::uint64_t>& novelty_history() const { return novelty_history_; }
  const std::vector<AuditEntry>& audit_log() const { return audit_; }
  const std::vector<Fact>& evicted() const { return evicted_; }
  std::optional<std::size_t> fact_cap() const { return fact_cap_; }
  const Snapshot& snapshot() const { return snapshot_; }
  bool knows(std::string_view input) const;

  friend ClmState update(const ClmState& state, const Fact& d);

 private:
  ClmState(Snapshot snap, std::optional<std::size_t> cap);

  Snapshot snapshot_;
  Plm current_;
  std::optional<std::size_t> fact_cap_;
  std::uint64_t t_ = 0;
  std::vector<std::uint64_t> capacity_history_;
  std::vector<std::uint64_t> novelty_history_;
  std::vector<AuditEntry> audit_;
  std::vector<Fact> evicted_;
};

/// h_{t+1} = U(h_t, d). A fact for a known input overwrites it and is logged.
ClmState update(const ClmState& state, const Fact& d);

/// Canonical bytes of a fact (what the novelty estimate compresses).
Bytes fact_bytes(const Fact& d);

/// Fact stored for s in a ClmSnapshot descriptor, if any.
std::optional<std::string> snapshot_fact(const Plm& h, std::string_view s);
/// Embedded base model of a ClmSnapshot, if its base rule is one.
std::optional<Plm> snapshot_base_model(const Plm& h);

struct CostParams {
  double c_infer = 1.0;
  double c_query = 1.0;
  double c_update = 1.0;

  /// Throws kDomain unless every cost is strictly positive.
  void validate() const;
};

/// N (c_infer + c_query).
double cost_rag(std::uint64_t n, const CostParams& p);
/// (c_infer + c_update) + (N - 1) c_infer; kDomain for N = 0.
double cost_clm(std::uint64_t n, const CostParams& p);
/// Smallest N with cost_clm(N) < cost_rag(N): floor(c_update / c_query) + 1.
std::uint64_t crossover(const CostParams& p);

enum class Strategy { kPureRag, kClm, kHybrid, kLossyPureClm };
std::string_view to_string(Strategy s);

struct LedgerRow {
  Strategy strategy;
  std::uint64_t query_index;  // 1-based
  std::string input;
  double infer = 0.0;
  double query = 0.0;
  double update = 0.0;
  double total() const { return infer + query + update; }
};

/// Append-only ledger with running totals per strategy.
class CostLedger {
 public:
  void append(LedgerRow row);
  double total(Strategy s) const;
  double total_at(Strategy s, std::uint64_t query_index) const;
  const std::vector<LedgerRow>& rows() const { return rows_; }
  /// Recomputes totals from rows and compares exactly.
  bool consistent() const;

 private:
  std::vector<LedgerRow> rows_;
  std::map<Strategy, double> totals_;
};

/// Event-by-event simulation of one fact queried n times.
CostLedger simulate_rag(std::uint64_t n, const CostParams& p, std::string_view input = "q");
CostLedger simulate_clm(std::uint64_t n, const CostParams& p, std::string_view input = "q");

/// Fraction of probe facts answered correctly before and incorrectly after.
/// kDomain on an empty probe set or a probe the earlier state gets wrong.
double forgetting_rate(const ClmState& before, const ClmState& after,
                       std::span<const Fact> probes);

/// Whether h's argmax at fact.input is fact.answer.
bool answers_correctly(const Plm& h, const Fact& fact);

}  // namespace hallab::clm
