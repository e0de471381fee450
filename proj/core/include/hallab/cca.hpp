// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Computational class alignment: does a task's demand fit inside what a
// (possibly augmented or adaptive) system can compute?
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "hallab/clm.hpp"

namespace hallab::cca {

enum class BaseClass { kStatic, kAdaptive };
enum class ClassKind { kStatic, kAdaptive, kOracleAugmented };

/// Lattice element. Adaptive systems may grow by `update_budget_bits`
/// (unbounded when nullopt); a non-empty oracle set makes the class
/// oracle-augmented over its base.
struct ComputationalClass {
  BaseClass base = BaseClass::kStatic;
  std::uint64_t capacity_bits = 0;
  std::optional<std::uint64_t> update_budget_bits;
  std::set<std::string> oracles;

  static ComputationalClass static_class(std::uint64_t capacity_bits);
  static ComputationalClass adaptive(std::uint64_t capacity_bits,
                                     std::optional<std::uint64_t> update_budget_bits = std::nullopt);
  ComputationalClass with_oracles(std::set<std::string> ids) const;

  ClassKind kind() const;
  /// Largest information content reachable: capacity, plus growth headroom
  /// for adaptive systems (+infinity when unbounded).
  double ceiling_bits() const;
};

/// Partial order: oracle sets nest, ceilings compare, and an adaptive class
/// never sits below a static one.
bool class_leq(const ComputationalClass& a, const ComputationalClass& b);

struct TaskProfile {
  std::uint64_t info_demand_bits = 0;
  std::set<std::string> required_oracles;
  bool self_referential = false;
  std::uint64_t recurrence = 1;

  void validate() const;
};

enum class Status { kAligned, kMisaligned, kAbstain };
enum class Reason { kMissingOracle, kSelfReferential, kCapacityShortfall };

std::string_view to_string(Status s);
std::string_view to_string(Reason r);

struct Verdict {
  Status status = Status::kAligned;
  std::optional<Reason> reason;  // set for kMisaligned and kAbstain
  std::string message;           // set for kAbstain
  std::string missing_oracle;    // kMissingOracle only
  std::uint64_t demand_bits = 0;
  double ceiling_bits = 0.0;
};

/// Checks oracles, then self-reference, then capacity; the first failure is
/// the verdict's reason.
Verdict align(const TaskProfile& task, const ComputationalClass& system);

/// Turns a misaligned verdict into a principled abstention naming the
/// violated boundary. kDomain for any other status.
Verdict abstain_message(const Verdict& misaligned);

struct Recommendation {
  clm::Strategy strategy;
  std::uint64_t crossover;
  std::string rationale;
};

/// PureRag below the amortization crossover; at or above it, Hybrid when the
/// task needs an oracle and Clm otherwise.
Recommendation recommend_strategy(const TaskProfile& task, const clm::CostParams& p);

/// One-line JSON record of a verdict.
std::string to_record(const Verdict& v);

}  // namespace hallab::cca
