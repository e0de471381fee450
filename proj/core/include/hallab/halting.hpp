// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Counter-machine programs, a budget-bounded simulating model, and the
// decider built from a model plus a finite exception table.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hallab/metrics.hpp"
#include "hallab/plm.hpp"

namespace hallab::halting {

enum class Opcode : std::uint8_t { kInc, kDec, kJz, kJmp, kHalt };

struct Instruction {
  Opcode op;
  std::uint32_t reg = 0;     // INC, DEC, JZ
  std::uint32_t target = 0;  // JZ, JMP

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct HaltsIn {
  std::uint64_t steps;
  friend bool operator==(const HaltsIn&, const HaltsIn&) = default;
};
struct NeverHalts {
  friend bool operator==(const NeverHalts&, const NeverHalts&) = default;
};
struct Unknown {
  friend bool operator==(const Unknown&, const Unknown&) = default;
};
using HaltLabel = std::variant<HaltsIn, NeverHalts, Unknown>;

/// A validated counter-machine program. Registers start at zero unless
/// run_bounded is given initial values; DEC on zero leaves zero.
class Program {
 public:
  Program(std::vector<Instruction> instructions, HaltLabel label = Unknown{});

  /// Parses the text format: one instruction per line (`INC r0`, `DEC r1`,
  /// `JZ r0 7`, `JMP 3`, `HALT`), `#` starts a comment, blank lines ignored.
  /// Jump targets are 0-based instruction indices.
  static Program parse(std::string_view text, HaltLabel label = Unknown{});

  /// Canonical text, one instruction per line with a trailing newline.
  std::string text() const;

  const std::vector<Instruction>& instructions() const { return instructions_; }
  std::uint32_t registers() const { return registers_; }
  const HaltLabel& label() const { return label_; }

 private:
  std::vector<Instruction> instructions_;
  std::uint32_t registers_ = 0;
  HaltLabel label_;
};

struct HaltedAt {
  std::uint64_t steps;
  friend bool operator==(const HaltedAt&, const HaltedAt&) = default;
};
struct BudgetExhausted {
  friend bool operator==(const BudgetExhausted&, const BudgetExhausted&) = default;
};
using RunResult = std::variant<HaltedAt, BudgetExhausted>;

/// Executes at most `budget` instructions; executing HALT counts as a step.
RunResult run_bounded(const Program& p, std::uint64_t budget,
                      std::vector<std::uint64_t> initial_registers = {});

enum class FamilyKind { kFastHalt, kSlowHalt, kNeverHalt };

/// FastHalt(n): halts within n steps. SlowHalt(n): halts in more than n
/// steps. NeverHalt: reaches an unconditional self-loop. Labels are exact.
std::vector<Program> make_program_family(FamilyKind kind, std::uint64_t n, std::size_t count);

inline constexpr std::string_view kHalts = "Halts";
inline constexpr std::string_view kDoesntHalt = "Doesn't Halt";

/// {"Halts", "Doesn't Halt"}.
const OutputSpace& answer_space();

/// Deterministic truth over the canonical text of labeled programs. Throws
/// kDomain for programs labeled Unknown.
ProbabilisticTruth halting_truth(const std::vector<Program>& programs);

struct BudgetSimulatorSpec {
  std::uint32_t budget = 1000;
  double confidence = 1.0;  // mass on "Halts" when the run halts in budget
  Dist fallback = Dist::uniform(2);
};

/// Model that parses its input as program text and simulates it for
/// `budget` steps; unparsable input gets the fallback too.
Plm make_budget_simulator(const BudgetSimulatorSpec& spec);
BudgetSimulatorSpec decode_budget_simulator(const Plm& h);

/// M': the exception table answers first; otherwise "Halts" iff
/// P_h("Halts" | program) > 0.5.
class ReductionDecider {
 public:
  ReductionDecider(Plm h, std::map<std::string, std::string> exceptions);

  struct Decision {
    std::string answer;
    bool from_exception_table;
    double halts_probability;  // NaN when answered from the table
  };

  Decision decide(const Program& p) const;

 private:
  Plm h_;
  std::map<std::string, std::string> exceptions_;  // canonical text -> answer
};

ReductionDecider decider_reduction(Plm h, std::map<std::string, std::string> exceptions);

struct FailureDemo {
  std::vector<HallucinationReport> slow_reports;   // SlowHalt(budget)
  std::vector<HallucinationReport> never_reports;  // NeverHalt
  bool slow_family_violated;   // every slow report violated
  bool never_family_violated;  // every never report violated
};

/// Runs h on programs engineered beyond its budget. For tau < ln 2 at least
/// one family is violated on every member.
FailureDemo demonstrate_failure(const Plm& h, double tau, std::size_t per_family = 16);

}  // namespace hallab::halting
