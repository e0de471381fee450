// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/cca.hpp"

#include <algorithm>
#include <limits>
#include <json.hpp>

#include "hallab/error.hpp"
#include "hallab/metrics.hpp"

namespace hallab::cca {

ComputationalClass ComputationalClass::static_class(std::uint64_t capacity_bits) {
  return ComputationalClass{BaseClass::kStatic, capacity_bits, std::nullopt, {}};
}

ComputationalClass ComputationalClass::adaptive(std::uint64_t capacity_bits,
                                                std::optional<std::uint64_t> update_budget_bits) {
  return ComputationalClass{BaseClass::kAdaptive, capacity_bits, update_budget_bits, {}};
}

ComputationalClass ComputationalClass::with_oracles(std::set<std::string> ids) const {
  auto out = *this;
  out.oracles.insert(ids.begin(), ids.end());
  return out;
}

ClassKind ComputationalClass::kind() const {
  if (!oracles.empty()) return ClassKind::kOracleAugmented;
  return base == BaseClass::kStatic ? ClassKind::kStatic : ClassKind::kAdaptive;
}

double ComputationalClass::ceiling_bits() const {
  const auto cap = static_cast<double>(capacity_bits);
  if (base == BaseClass::kStatic) return cap;
  if (!update_budget_bits) return std::numeric_limits<double>::infinity();
  return cap + static_cast<double>(*update_budget_bits);
}

bool class_leq(const ComputationalClass& a, const ComputationalClass& b) {
  if (a.base == BaseClass::kAdaptive && b.base == BaseClass::kStatic) return false;
  if (!std::includes(b.oracles.begin(), b.oracles.end(), a.oracles.begin(), a.oracles.end())) {
    return false;
  }
  return a.ceiling_bits() <= b.ceiling_bits();
}

void TaskProfile::validate() const {
  if (recurrence < 1) fail(ErrorCode::kDomain, "task recurrence must be >= 1");
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::kAligned: return "Aligned";
    case Status::kMisaligned: return "Misaligned";
    case Status::kAbstain: return "Abstain";
  }
  return "Unknown";
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::kMissingOracle: return "MissingOracle";
    case Reason::kSelfReferential: return "SelfReferential";
    case Reason::kCapacityShortfall: return "CapacityShortfall";
  }
  return "Unknown";
}

Verdict align(const TaskProfile& task, const ComputationalClass& system) {
  task.validate();
  Verdict v;
  v.demand_bits = task.info_demand_bits;
  v.ceiling_bits = system.ceiling_bits();
  for (const auto& id : task.required_oracles) {
    if (!system.oracles.contains(id)) {
      v.status = Status::kMisaligned;
      v.reason = Reason::kMissingOracle;
      v.missing_oracle = id;
      return v;
    }
  }
  if (task.self_referential && system.oracles.empty()) {
    v.status = Status::kMisaligned;
    v.reason = Reason::kSelfReferential;
    return v;
  }
  // Equal capacity counts as aligned.
  if (static_cast<double>(task.info_demand_bits) > v.ceiling_bits) {
    v.status = Status::kMisaligned;
    v.reason = Reason::kCapacityShortfall;
    return v;
  }
  v.status = Status::kAligned;
  return v;
}

Verdict abstain_message(const Verdict& misaligned) {
  if (misaligned.status != Status::kMisaligned || !misaligned.reason) {
    fail(ErrorCode::kDomain, "abstention is only derived from a misaligned verdict");
  }
  Verdict out = misaligned;
  out.status = Status::kAbstain;
  switch (*misaligned.reason) {
    case Reason::kMissingOracle:
      out.message = "Uncomputability boundary: this query needs an answer no standalone model "
                    "can compute. Requesting access to oracle '" +
                    misaligned.missing_oracle + "'.";
      break;
    case Reason::kSelfReferential:
      out.message = "Diagonalization limit: the query refers to this system's own output, so "
                    "any fixed answer can be contradicted. Abstaining without an external "
                    "oracle.";
      break;
    case Reason::kCapacityShortfall:
      out.message = "Information-theoretic boundary: the task demands " +
                    std::to_string(misaligned.demand_bits) + " bits but capacity is " +
                    format_real(misaligned.ceiling_bits) + " bits.";
      break;
  }
  return out;
}

Recommendation recommend_strategy(const TaskProfile& task, const clm::CostParams& p) {
  task.validate();
  const auto n0 = clm::crossover(p);
  if (task.recurrence < n0) {
    return {clm::Strategy::kPureRag, n0,
            "recurrence " + std::to_string(task.recurrence) + " < crossover " +
                std::to_string(n0) + ": repeated retrieval is cheaper than one update"};
  }
  const auto s = task.required_oracles.empty() ? clm::Strategy::kClm : clm::Strategy::kHybrid;
  return {s, n0,
          "recurrence " + std::to_string(task.recurrence) + " >= crossover " +
              std::to_string(n0) + ": internalization amortizes" +
              (s == clm::Strategy::kHybrid ? "; oracle still required for uncovered queries"
                                          : "")};
}

std::string to_record(const Verdict& v) {
  nlohmann::ordered_json j;
  j["status"] = std::string(to_string(v.status));
  if (v.reason) j["reason"] = std::string(to_string(*v.reason));
  if (!v.missing_oracle.empty()) j["missing_oracle"] = v.missing_oracle;
  j["demand_bits"] = v.demand_bits;
  j["ceiling_bits"] = format_real(v.ceiling_bits);
  if (!v.message.empty()) j["message"] = v.message;
  return j.dump();
}

}  // namespace hallab::cca
