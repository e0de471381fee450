// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Self-referential adversarial inputs against standard models, and models
// that answer by consulting an oracle.
#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hallab/metrics.hpp"
#include "hallab/plm.hpp"

namespace hallab::oracle {

/// A deterministic answer source. `answer` is the definition (uncounted);
/// `query` is the metered access path used by models.
class Oracle {
 public:
  explicit Oracle(std::string id, double cost_per_query = 1.0);
  virtual ~Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  virtual std::string answer(std::string_view s) const = 0;

  /// Counted access; appends a trace entry.
  std::string query(std::string_view s);

  const std::string& id() const { return id_; }
  double cost_per_query() const { return cost_per_query_; }
  std::uint64_t call_count() const { return calls_.load(); }

  struct TraceEntry {
    std::string input;
    std::string answer;
    double cumulative_cost;
  };
  /// Single-owner access only: the trace itself is not synchronized.
  const std::vector<TraceEntry>& trace() const { return trace_; }
  /// One line per query: input, answer, cumulative cost (CSV).
  void write_trace_csv(std::ostream& os) const;

 private:
  std::string id_;
  double cost_per_query_;
  std::atomic<std::uint64_t> calls_{0};
  std::vector<TraceEntry> trace_;
};

/// Fixed lookup table with a default answer for unlisted inputs.
class TableOracle final : public Oracle {
 public:
  TableOracle(std::string id, std::map<std::string, std::string, std::less<>> table,
              std::string default_answer, double cost_per_query = 1.0);
  std::string answer(std::string_view s) const override;

 private:
  std::map<std::string, std::string, std::less<>> table_;
  std::string default_answer_;
};

/// {y_0..y_{n-1}} followed by {NOT(y_0)..NOT(y_{n-1})}.
OutputSpace doubled_space(const OutputSpace& base);
std::string negation_of(std::string_view symbol);

inline constexpr std::string_view kSelfRefPrefix = "SELFREF:";

/// "SELFREF:" + hex FNV-1a-64 of the model's descriptor.
std::string build_self_referential_input(const Plm& h);

/// Contradicts h at its own self-referential input: returns NOT(y*) for
/// h's argmax y* (or y when y* is NOT(y)); every other input gets the fixed
/// default answer (symbol 0).
class AdversarialOracle final : public Oracle {
 public:
  explicit AdversarialOracle(const Plm& h, double cost_per_query = 1.0);
  std::string answer(std::string_view s) const override;

  const std::string& adversarial_input() const { return s_star_; }
  const std::string& model_answer() const { return y_star_; }

 private:
  std::string s_star_;
  std::string y_star_;
  std::string contradiction_;
  std::string default_answer_;
};

AdversarialOracle adversarial_oracle(const Plm& h);

/// Descriptor-backed model that puts probability 1 on the oracle's answer.
class OracleAugmentedPlm {
 public:
  OracleAugmentedPlm(OutputSpace space, Oracle& oracle);

  const Plm& plm() const { return plm_; }
  const OutputSpace& space() const { return space_; }
  /// Queries the oracle once.
  Dist eval(std::string_view s);

 private:
  OutputSpace space_;
  Oracle* oracle_;
  Plm plm_;
};

/// f_O(s) = {O(s)} over the given space.
double h_stray_against_oracle(const Dist& model_dist, const OutputSpace& space,
                              const Oracle& oracle, std::string_view s);

struct EscapeResult {
  HallucinationReport standard_report;              // h at s*
  std::vector<HallucinationReport> augmented_reports;  // h^O on every test input
  std::uint64_t oracle_calls;
};

/// Builds the adversarial oracle for h, then scores h at s* and an
/// oracle-augmented model on `test_inputs`.
EscapeResult verify_oracle_escape(const Plm& h, const std::vector<std::string>& test_inputs,
                                  double epsilon = 0.0);

}  // namespace hallab::oracle
