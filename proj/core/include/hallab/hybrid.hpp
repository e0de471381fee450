// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Retrieval plus continual learning: answers come from a mix of retrieved
// context and internal belief, and frequently queried facts get internalized.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hallab/cca.hpp"
#include "hallab/clm.hpp"
#include "hallab/plm.hpp"

namespace hallab::hybrid {

/// Exact-match fact table. Keys in the noise mask return a wrong symbol.
class RetrievalStore {
 public:
  /// Every answer must be a symbol of `space`.
  RetrievalStore(OutputSpace space, std::map<std::string, std::string, std::less<>> entries);

  const OutputSpace& space() const { return space_; }
  /// Ground-truth answers (the mask does not apply).
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }
  const std::set<std::string, std::less<>>& noise_mask() const { return mask_; }
  double corruption_rate() const { return rho_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view s) const { return entries_.find(s) != entries_.end(); }

  std::optional<std::string> truth(std::string_view s) const;
  /// What retrieval returns for s, corrupted when masked.
  std::optional<std::string> lookup(std::string_view s) const;

  friend RetrievalStore inject_noise(const RetrievalStore& store, double rho, std::uint64_t seed);

 private:
  OutputSpace space_;
  std::map<std::string, std::string, std::less<>> entries_;
  std::set<std::string, std::less<>> mask_;
  double rho_ = 0.0;
};

/// The symbol after `answer` in space order, wrapping around.
std::string corrupted_answer(const OutputSpace& space, std::string_view answer);

/// Copy with round(rho * size) seeded-random keys corrupted. kDomain unless
/// rho is in [0,1].
RetrievalStore inject_noise(const RetrievalStore& store, double rho, std::uint64_t seed);

struct HybridConfig {
  std::uint64_t trigger_threshold = 3;
  double w_high = 0.9;
  double w_low = 0.0;

  /// kDomain unless T >= 1 and 0 <= w_low < w_high <= 1.
  void validate() const;
};

struct InternalizationEvent {
  std::uint64_t query_index;  // 1-based position in the state's query stream
  std::string input;
  std::string answer;  // what was internalized (may be corrupted)
  double reliance_before;
  double reliance_after;
};

struct QueryOutcome {
  std::optional<Dist> answer;            // nullopt when abstaining
  std::optional<cca::Verdict> abstention;
  clm::LedgerRow row;
  bool internalized_now = false;
};

class HybridState {
 public:
  explicit HybridState(RetrievalStore store, HybridConfig config = {},
                       clm::BaseRule base = clm::UniformRule{});

  /// Answers s, charges the ledger, and internalizes on the T-th query.
  QueryOutcome handle_query(std::string_view s, const clm::CostParams& p);
  /// The answer handle_query would give, without side effects.
  std::optional<Dist> peek(std::string_view s) const;

  /// Current weight on retrieved context; kDomain for unknown inputs.
  double reliance_score(std::string_view s) const;
  bool internalized(std::string_view s) const { return internalized_.contains(s); }
  std::uint64_t frequency(std::string_view s) const;

  /// Swaps the retrieval backend (for example a corrupted copy).
  void set_store(RetrievalStore store);

  const RetrievalStore& store() const { return store_; }
  const clm::ClmState& clm() const { return clm_; }
  const HybridConfig& config() const { return config_; }
  const clm::CostLedger& ledger() const { return ledger_; }
  const std::vector<InternalizationEvent>& events() const { return events_; }
  std::uint64_t queries() const { return queries_; }

 private:
  Dist answer_for(std::string_view s, const std::optional<std::string>& retrieved) const;

  RetrievalStore store_;
  HybridConfig config_;
  clm::ClmState clm_;
  std::map<std::string, std::uint64_t, std::less<>> freq_;
  std::set<std::string, std::less<>> internalized_;
  clm::CostLedger ledger_;
  std::vector<InternalizationEvent> events_;
  std::uint64_t queries_ = 0;
};

/// Whether the argmax of `answer` is the symbol `truth`.
bool is_correct(const OutputSpace& space, const std::optional<Dist>& answer,
                std::string_view truth);

enum class Policy { kPureRag, kHybrid };

struct RobustnessSetup {
  RetrievalStore clean_store;
  HybridConfig config;
  clm::CostParams costs;
  std::vector<std::string> warmup;  // processed on the clean store before noise
  std::uint64_t noise_seed = 0;
};

/// Accuracy (against clean truth) over `workload` once noise rho has been
/// injected. The hybrid warms up on the clean store first and keeps learning
/// during the workload.
double measure_robustness(Policy policy, double rho, std::span<const std::string> workload,
                          const RobustnessSetup& setup);

/// Each key once per round, in key order.
std::vector<std::string> uniform_workload(std::span<const std::string> keys,
                                          std::size_t rounds = 1);
/// n draws with P(rank k) proportional to k^-s (first key is rank 1).
std::vector<std::string> zipf_workload(std::span<const std::string> keys, std::size_t n,
                                       double s, std::uint64_t seed);

/// Closed-form hybrid cost for one fact queried n times with trigger T.
double cost_hybrid(std::uint64_t n, const clm::CostParams& p, std::uint64_t trigger_threshold);
/// Smallest N with cost_hybrid(N) < cost_rag(N): crossover(p) + T.
std::uint64_t hybrid_crossover(const clm::CostParams& p, std::uint64_t trigger_threshold);

struct CostCurvePoint {
  std::uint64_t n;
  double rag;
  double clm;
  double hybrid;  // ledger-accumulated from an event trace
};

/// Costs for N = 1..max_n on a single recurring fact.
std::vector<CostCurvePoint> cost_curve(const clm::CostParams& p, std::uint64_t trigger_threshold,
                                       std::uint64_t max_n);
void write_cost_curve_csv(std::ostream& os, std::span<const CostCurvePoint> curve);

struct ScenarioConfig {
  std::size_t facts = 200;
  std::size_t symbols = 8;
  double zipf_s = 1.1;
  double rho = 0.15;
  std::size_t warmup_queries = 2000;
  std::size_t eval_queries = 2000;
  HybridConfig hybrid;
  std::size_t lossy_fact_cap = 150;
  clm::CostParams costs;
  std::uint64_t seed = 1;

  void validate() const;
};

struct StrategyRow {
  clm::Strategy strategy;
  double accuracy;
  double forgetting;
  double robustness;
};

struct ScenarioResult {
  std::vector<StrategyRow> rows;  // PureRag, LossyPureClm, Hybrid
  double uniform_rag_accuracy;    // PureRag on the noisy store, each fact once
  std::vector<InternalizationEvent> reliance;  // robustness run's events
  clm::CostLedger ledger;                      // robustness run's hybrid ledger

  const StrategyRow& row(clm::Strategy s) const;
  /// The qualitative orderings: Forget(PureRag) = 0 <= Forget(Hybrid) <
  /// Forget(LossyPureClm) and Robust(Hybrid) > Robust(PureRag).
  bool orderings_hold() const;
};

/// Fact answers drawn uniformly from the space, keys "fact#NNN".
RetrievalStore make_fact_store(std::size_t facts, std::size_t symbols, std::uint64_t seed);

ScenarioResult run_scenario(const ScenarioConfig& config);

void write_strategy_table_csv(std::ostream& os, std::span<const StrategyRow> rows);
void write_reliance_csv(std::ostream& os, std::span<const InternalizationEvent> events);

}  // namespace hallab::hybrid
