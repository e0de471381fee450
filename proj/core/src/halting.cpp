// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/halting.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "hallab/error.hpp"
#include "kinds.hpp"

namespace hallab::halting {

namespace {

std::uint32_t max_register(const std::vector<Instruction>& ins) {
  std::uint32_t regs = 1;
  for (const auto& i : ins) {
    if (i.op == Opcode::kInc || i.op == Opcode::kDec || i.op == Opcode::kJz) {
      regs = std::max(regs, i.reg + 1);
    }
  }
  return regs;
}

// True when straight-line execution from the start reaches `JMP k` at index
// k before any other control transfer.
bool has_reachable_self_loop(const std::vector<Instruction>& ins) {
  for (std::size_t pc = 0; pc < ins.size(); ++pc) {
    switch (ins[pc].op) {
      case Opcode::kInc:
      case Opcode::kDec:
        continue;
      case Opcode::kJmp:
        return ins[pc].target == pc;
      default:
        return false;
    }
  }
  return false;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::uint32_t parse_u32(std::string_view tok, std::size_t line) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(ErrorCode::kDecode, "line " + std::to_string(line) + ": bad number '" +
                                 std::string(tok) + "'");
  }
  return v;
}

std::uint32_t parse_reg(std::string_view tok, std::size_t line) {
  if (tok.size() < 2 || tok[0] != 'r') {
    fail(ErrorCode::kDecode, "line " + std::to_string(line) + ": expected register, got '" +
                                 std::string(tok) + "'");
  }
  return parse_u32(tok.substr(1), line);
}

}  // namespace

Program::Program(std::vector<Instruction> instructions, HaltLabel label)
    : instructions_(std::move(instructions)), label_(std::move(label)) {
  if (instructions_.empty()) fail(ErrorCode::kDecode, "empty program");
  for (const auto& ins : instructions_) {
    if ((ins.op == Opcode::kJz || ins.op == Opcode::kJmp) && ins.target >= instructions_.size()) {
      fail(ErrorCode::kDecode, "jump target " + std::to_string(ins.target) + " out of range");
    }
  }
  registers_ = max_register(instructions_);
  if (const auto* h = std::get_if<HaltsIn>(&label_)) {
    const auto run = run_bounded(*this, h->steps);
    const auto* halted = std::get_if<HaltedAt>(&run);
    if (halted == nullptr || halted->steps != h->steps) {
      fail(ErrorCode::kDomain, "HaltsIn label does not match bounded execution");
    }
  } else if (std::holds_alternative<NeverHalts>(label_)) {
    if (!has_reachable_self_loop(instructions_)) {
      fail(ErrorCode::kDomain, "NeverHalts label needs a reachable unconditional self-loop");
    }
  }
}

Program Program::parse(std::string_view text, HaltLabel label) {
  std::vector<Instruction> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto tok = split_ws(line);
    const auto& op = tok[0];
    auto arity = [&](std::size_t n) {
      if (tok.size() != n + 1) {
        fail(ErrorCode::kDecode, "line " + std::to_string(line_no) + ": '" +
                                     std::string(op) + "' takes " + std::to_string(n) +
                                     " operand(s)");
      }
    };
    if (op == "INC") {
      arity(1);
      out.push_back({Opcode::kInc, parse_reg(tok[1], line_no), 0});
    } else if (op == "DEC") {
      arity(1);
      out.push_back({Opcode::kDec, parse_reg(tok[1], line_no), 0});
    } else if (op == "JZ") {
      arity(2);
      out.push_back({Opcode::kJz, parse_reg(tok[1], line_no), parse_u32(tok[2], line_no)});
    } else if (op == "JMP") {
      arity(1);
      out.push_back({Opcode::kJmp, 0, parse_u32(tok[1], line_no)});
    } else if (op == "HALT") {
      arity(0);
      out.push_back({Opcode::kHalt, 0, 0});
    } else {
      fail(ErrorCode::kDecode, "line " + std::to_string(line_no) + ": unknown opcode '" +
                                   std::string(op) + "'");
    }
  }
  return Program(std::move(out), std::move(label));
}

std::string Program::text() const {
  std::ostringstream os;
  for (const auto& i : instructions_) {
    switch (i.op) {
      case Opcode::kInc: os << "INC r" << i.reg; break;
      case Opcode::kDec: os << "DEC r" << i.reg; break;
      case Opcode::kJz: os << "JZ r" << i.reg << ' ' << i.target; break;
      case Opcode::kJmp: os << "JMP " << i.target; break;
      case Opcode::kHalt: os << "HALT"; break;
    }
    os << '\n';
  }
  return os.str();
}

RunResult run_bounded(const Program& p, std::uint64_t budget,
                      std::vector<std::uint64_t> initial_registers) {
  if (budget == 0) fail(ErrorCode::kDomain, "budget must be >= 1");
  std::vector<std::uint64_t> regs = std::move(initial_registers);
  if (regs.size() < p.registers()) regs.resize(p.registers(), 0);
  const auto& ins = p.instructions();
  std::size_t pc = 0;
  std::uint64_t steps = 0;
  while (steps < budget) {
    if (pc >= ins.size()) return HaltedAt{steps};  // fell off the end
    const auto& i = ins[pc];
    ++steps;
    switch (i.op) {
      case Opcode::kInc: ++regs[i.reg]; ++pc; break;
      case Opcode::kDec: if (regs[i.reg] > 0) --regs[i.reg]; ++pc; break;
      case Opcode::kJz: pc = regs[i.reg] == 0 ? i.target : pc + 1; break;
      case Opcode::kJmp: pc = i.target; break;
      case Opcode::kHalt: return HaltedAt{steps};
    }
  }
  if (pc >= ins.size()) return HaltedAt{steps};
  return BudgetExhausted{};
}

std::vector<Program> make_program_family(FamilyKind kind, std::uint64_t n, std::size_t count) {
  if (n == 0) fail(ErrorCode::kDomain, "family parameter must be >= 1");
  std::vector<Program> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<Instruction> ins;
    switch (kind) {
      case FamilyKind::kFastHalt: {
        // m INCs then HALT: m + 1 steps.
        const auto m = j % n;
        for (std::uint64_t k = 0; k < m; ++k) {
          ins.push_back({Opcode::kInc, static_cast<std::uint32_t>(k % 3), 0});
        }
        ins.push_back({Opcode::kHalt});
        out.emplace_back(std::move(ins), HaltsIn{m + 1});
        break;
      }
      case FamilyKind::kSlowHalt: {
        // k INCs, then a countdown loop: 4k steps in total.
        const auto k = n / 4 + 1 + j;
        for (std::uint64_t i = 0; i < k; ++i) ins.push_back({Opcode::kInc, 0, 0});
        const auto loop = static_cast<std::uint32_t>(k);
        ins.push_back({Opcode::kDec, 0, 0});
        ins.push_back({Opcode::kJz, 0, loop + 3});
        ins.push_back({Opcode::kJmp, 0, loop});
        ins.push_back({Opcode::kHalt});
        out.emplace_back(std::move(ins), HaltsIn{4 * k});
        break;
      }
      case FamilyKind::kNeverHalt: {
        for (std::size_t i = 0; i < j; ++i) {
          ins.push_back({Opcode::kInc, static_cast<std::uint32_t>(i % 2), 0});
        }
        const auto self = static_cast<std::uint32_t>(ins.size());
        ins.push_back({Opcode::kJmp, 0, self});
        out.emplace_back(std::move(ins), NeverHalts{});
        break;
      }
    }
  }
  return out;
}

const OutputSpace& answer_space() {
  static const OutputSpace space({std::string(kHalts), std::string(kDoesntHalt)});
  return space;
}

ProbabilisticTruth halting_truth(const std::vector<Program>& programs) {
  ProbabilisticTruth truth(answer_space());
  for (const auto& p : programs) {
    if (std::holds_alternative<Unknown>(p.label())) {
      fail(ErrorCode::kDomain, "halting truth is undefined for unlabeled programs");
    }
    const bool halts = std::holds_alternative<HaltsIn>(p.label());
    truth.set(p.text(), Dist::point(2, halts ? 0 : 1));
  }
  return truth;
}

Plm make_budget_simulator(const BudgetSimulatorSpec& spec) {
  if (spec.budget == 0) fail(ErrorCode::kDomain, "budget must be >= 1");
  if (!(spec.confidence > 0.5 && spec.confidence <= 1.0)) {
    fail(ErrorCode::kDomain, "confidence must lie in (0.5, 1]");
  }
  if (spec.fallback.size() != 2) fail(ErrorCode::kDimension, "fallback must cover 2 answers");
  ByteWriter w;
  w.u32(spec.budget);
  w.f64(spec.confidence);
  w.f64(spec.fallback[0]);
  w.f64(spec.fallback[1]);
  return Plm::frame(PlmKind::kBudgetSimulator, w.bytes());
}

namespace {

BudgetSimulatorSpec decode_spec(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  BudgetSimulatorSpec spec;
  spec.budget = r.u32();
  spec.confidence = r.f64();
  const double a = r.f64();
  const double b = r.f64();
  r.expect_done("budget simulator payload");
  if (spec.budget == 0 || !(spec.confidence > 0.5 && spec.confidence <= 1.0)) {
    fail(ErrorCode::kDecode, "invalid budget simulator parameters");
  }
  try {
    spec.fallback = Dist({a, b});
  } catch (const Error& e) {
    fail(ErrorCode::kDecode, std::string("invalid fallback: ") + e.what());
  }
  return spec;
}

}  // namespace

BudgetSimulatorSpec decode_budget_simulator(const Plm& h) {
  if (h.kind() != PlmKind::kBudgetSimulator) fail(ErrorCode::kDecode, "not a budget simulator");
  return decode_spec(h.payload());
}

ReductionDecider::ReductionDecider(Plm h, std::map<std::string, std::string> exceptions)
    : h_(std::move(h)), exceptions_(std::move(exceptions)) {
  for (const auto& [prog, answer] : exceptions_) {
    if (answer != kHalts && answer != kDoesntHalt) {
      fail(ErrorCode::kDomain, "exception answer must be a halting verdict");
    }
  }
}

ReductionDecider::Decision ReductionDecider::decide(const Program& p) const {
  const auto text = p.text();
  if (auto it = exceptions_.find(text); it != exceptions_.end()) {
    return {it->second, true, std::numeric_limits<double>::quiet_NaN()};
  }
  const auto space = plm_output_space(h_);
  const auto idx = space.index_of(kHalts);
  if (!idx) fail(ErrorCode::kDimension, "model has no \"Halts\" output");
  const double ph = eval_plm(h_, text)[*idx];
  return {std::string(ph > 0.5 ? kHalts : kDoesntHalt), false, ph};
}

ReductionDecider decider_reduction(Plm h, std::map<std::string, std::string> exceptions) {
  return ReductionDecider(std::move(h), std::move(exceptions));
}

FailureDemo demonstrate_failure(const Plm& h, double tau, std::size_t per_family) {
  if (!(tau < std::log(2.0))) fail(ErrorCode::kDomain, "tau must be below ln 2");
  const auto spec = decode_budget_simulator(h);
  const auto slow = make_program_family(FamilyKind::kSlowHalt, spec.budget, per_family);
  const auto never = make_program_family(FamilyKind::kNeverHalt, spec.budget, per_family);
  auto reports_for = [&](const std::vector<Program>& family, bool& all_violated) {
    const auto truth = halting_truth(family);
    std::vector<HallucinationReport> out;
    all_violated = !family.empty();
    for (const auto& p : family) {
      auto text = p.text();
      const double d = h_distort(h, truth, text);
      out.push_back(HallucinationReport::make(std::move(text), MetricKind::kDistort, d, tau));
      all_violated = all_violated && out.back().violated;
    }
    return out;
  };
  FailureDemo demo;
  demo.slow_reports = reports_for(slow, demo.slow_family_violated);
  demo.never_reports = reports_for(never, demo.never_family_violated);
  return demo;
}

}  // namespace hallab::halting

namespace hallab::detail {

Dist eval_budget_simulator(std::span<const std::uint8_t> payload, std::string_view s) {
  const auto spec = halting::decode_spec(payload);
  std::optional<halting::Program> program;
  try {
    program = halting::Program::parse(s);
  } catch (const Error&) {
    return spec.fallback;
  }
  const auto run = halting::run_bounded(*program, spec.budget);
  if (std::holds_alternative<halting::HaltedAt>(run)) {
    return Dist({spec.confidence, 1.0 - spec.confidence});
  }
  return spec.fallback;
}

OutputSpace budget_simulator_space() { return halting::answer_space(); }

}  // namespace hallab::detail
