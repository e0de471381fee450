// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/oracle_escape.hpp"

#include <ostream>

#include "hallab/error.hpp"

namespace hallab::oracle {

Oracle::Oracle(std::string id, double cost_per_query)
    : id_(std::move(id)), cost_per_query_(cost_per_query) {
  if (!(cost_per_query_ >= 0.0)) fail(ErrorCode::kDomain, "oracle cost must be non-negative");
}

std::string Oracle::query(std::string_view s) {
  auto a = answer(s);
  const auto n = ++calls_;
  trace_.push_back({std::string(s), a, static_cast<double>(n) * cost_per_query_});
  return a;
}

void Oracle::write_trace_csv(std::ostream& os) const {
  os << "input,answer,cumulative_cost\n";
  for (const auto& t : trace_) {
    os << csv_field(t.input) << ',' << csv_field(t.answer) << ',' << format_real(t.cumulative_cost)
       << '\n';
  }
}

TableOracle::TableOracle(std::string id, std::map<std::string, std::string, std::less<>> table,
                         std::string default_answer, double cost_per_query)
    : Oracle(std::move(id), cost_per_query),
      table_(std::move(table)),
      default_answer_(std::move(default_answer)) {}

std::string TableOracle::answer(std::string_view s) const {
  if (auto it = table_.find(s); it != table_.end()) return it->second;
  return default_answer_;
}

std::string negation_of(std::string_view symbol) { return "NOT(" + std::string(symbol) + ")"; }

OutputSpace doubled_space(const OutputSpace& base) {
  auto symbols = base.symbols();
  for (const auto& s : base.symbols()) symbols.push_back(negation_of(s));
  return OutputSpace(std::move(symbols));
}

std::string build_self_referential_input(const Plm& h) {
  return std::string(kSelfRefPrefix) + hex64(fnv1a64(h.descriptor()));
}

namespace {

std::string contradict(std::string_view y) {
  if (y.starts_with("NOT(") && y.ends_with(")")) return std::string(y.substr(4, y.size() - 5));
  return negation_of(y);
}

}  // namespace

AdversarialOracle::AdversarialOracle(const Plm& h, double cost_per_query)
    : Oracle("adversarial:" + hex64(fnv1a64(h.descriptor())), cost_per_query),
      s_star_(build_self_referential_input(h)) {
  const auto space = plm_output_space(h);
  y_star_ = space.symbol(argmax_output(eval_plm(h, s_star_)).index);
  contradiction_ = contradict(y_star_);
  if (!space.index_of(contradiction_)) {
    fail(ErrorCode::kDomain, "output space lacks the negation symbol " + contradiction_ +
                                 " (use doubled_space)");
  }
  default_answer_ = space.symbol(0);
}

std::string AdversarialOracle::answer(std::string_view s) const {
  return s == s_star_ ? contradiction_ : default_answer_;
}

AdversarialOracle adversarial_oracle(const Plm& h) { return AdversarialOracle(h); }

namespace {

Plm augmented_descriptor(const OutputSpace& space, const Oracle& oracle) {
  ByteWriter w;
  w.str(oracle.id());
  space.encode(w);
  return Plm::frame(PlmKind::kOracleAugmented, w.bytes());
}

}  // namespace

OracleAugmentedPlm::OracleAugmentedPlm(OutputSpace space, Oracle& oracle)
    : space_(std::move(space)), oracle_(&oracle), plm_(augmented_descriptor(space_, oracle)) {}

Dist OracleAugmentedPlm::eval(std::string_view s) {
  const auto a = oracle_->query(s);
  const auto idx = space_.index_of(a);
  if (!idx) fail(ErrorCode::kDomain, "oracle answer '" + a + "' is outside the output space");
  return Dist::point(space_.size(), *idx);
}

double h_stray_against_oracle(const Dist& model_dist, const OutputSpace& space,
                              const Oracle& oracle, std::string_view s) {
  const auto idx = space.index_of(oracle.answer(s));
  if (!idx) fail(ErrorCode::kDomain, "oracle answer is outside the output space");
  RelationalTruth truth(space);
  truth.set(std::string(s), {*idx});
  return h_stray(model_dist, truth, s);
}

EscapeResult verify_oracle_escape(const Plm& h, const std::vector<std::string>& test_inputs,
                                  double epsilon) {
  AdversarialOracle oracle(h);
  const auto space = plm_output_space(h);
  const auto& s_star = oracle.adversarial_input();

  EscapeResult out{
      HallucinationReport::make(
          s_star, MetricKind::kStray,
          h_stray_against_oracle(eval_plm(h, s_star), space, oracle, s_star), epsilon),
      {},
      0};

  OracleAugmentedPlm augmented(space, oracle);
  out.augmented_reports.reserve(test_inputs.size());
  for (const auto& s : test_inputs) {
    const auto d = augmented.eval(s);
    out.augmented_reports.push_back(HallucinationReport::make(
        s, MetricKind::kStray, h_stray_against_oracle(d, space, oracle, s), epsilon));
  }
  out.oracle_calls = oracle.call_count();
  return out;
}

}  // namespace hallab::oracle
