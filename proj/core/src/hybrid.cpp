// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>

#include "hallab/error.hpp"
#include "hallab/metrics.hpp"
#include "hallab/random.hpp"

namespace hallab::hybrid {

namespace {

constexpr std::string_view kFactStoreOracle = "fact-store";

cca::Verdict unknown_input_abstention(std::string_view s) {
  cca::Verdict v;
  v.status = cca::Status::kMisaligned;
  v.reason = cca::Reason::kMissingOracle;
  v.missing_oracle = std::string(kFactStoreOracle);
  auto out = cca::abstain_message(v);
  out.message += " Unknown input: " + std::string(s);
  return out;
}

}  // namespace

RetrievalStore::RetrievalStore(OutputSpace space,
                               std::map<std::string, std::string, std::less<>> entries)
    : space_(std::move(space)), entries_(std::move(entries)) {
  for (const auto& [k, v] : entries_) {
    if (!space_.index_of(v)) {
      fail(ErrorCode::kDomain, "store answer for '" + k + "' is not an output symbol: " + v);
    }
  }
}

std::optional<std::string> RetrievalStore::truth(std::string_view s) const {
  auto it = entries_.find(s);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> RetrievalStore::lookup(std::string_view s) const {
  auto it = entries_.find(s);
  if (it == entries_.end()) return std::nullopt;
  if (mask_.contains(s)) return corrupted_answer(space_, it->second);
  return it->second;
}

std::string corrupted_answer(const OutputSpace& space, std::string_view answer) {
  const auto idx = space.index_of(answer);
  if (!idx) fail(ErrorCode::kDomain, "cannot corrupt a non-symbol answer");
  return space.symbol((*idx + 1) % space.size());
}

RetrievalStore inject_noise(const RetrievalStore& store, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) fail(ErrorCode::kDomain, "corruption rate outside [0,1]");
  RetrievalStore out = store;
  out.mask_.clear();
  out.rho_ = rho;
  const auto n = store.entries_.size();
  const auto k = static_cast<std::size_t>(std::llround(rho * static_cast<double>(n)));
  std::vector<const std::string*> keys;
  keys.reserve(n);
  for (const auto& [key, _] : store.entries_) keys.push_back(&key);
  // Partial Fisher-Yates: the first k slots become the mask.
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + uniform_below(rng, n - i);
    std::swap(keys[i], keys[j]);
    out.mask_.insert(*keys[i]);
  }
  return out;
}

void HybridConfig::validate() const {
  if (trigger_threshold < 1) fail(ErrorCode::kDomain, "trigger threshold must be >= 1");
  if (!(w_low >= 0.0 && w_low < w_high && w_high <= 1.0)) {
    fail(ErrorCode::kDomain, "mixing weights need 0 <= w_low < w_high <= 1");
  }
}

HybridState::HybridState(RetrievalStore store, HybridConfig config, clm::BaseRule base)
    : store_(std::move(store)),
      config_(config),
      clm_(clm::ClmState::create(store_.space(), std::move(base))) {
  config_.validate();
}

Dist HybridState::answer_for(std::string_view s, const std::optional<std::string>& retrieved) const {
  const Dist internal = eval_plm(clm_.current(), s);
  const double w = internalized(s) ? config_.w_low : config_.w_high;
  if (!retrieved || w == 0.0) return internal;
  const auto ctx = Dist::point(store_.space().size(), *store_.space().index_of(*retrieved));
  return Dist::mix(internal, ctx, w);
}

std::optional<Dist> HybridState::peek(std::string_view s) const {
  const auto retrieved = store_.lookup(s);
  if (!retrieved && !internalized(s)) return std::nullopt;
  return answer_for(s, retrieved);
}

QueryOutcome HybridState::handle_query(std::string_view s, const clm::CostParams& p) {
  p.validate();
  ++queries_;
  QueryOutcome out;
  out.row = {clm::Strategy::kHybrid, queries_, std::string(s), p.c_infer, 0.0, 0.0};
  const bool known = internalized(s);
  const auto retrieved = store_.lookup(s);
  if (!known && !retrieved) {
    out.abstention = unknown_input_abstention(s);
    ledger_.append(out.row);
    return out;
  }
  out.answer = answer_for(s, retrieved);
  if (!known && retrieved && config_.w_high > 0.0) out.row.query = p.c_query;
  const auto count = ++freq_[std::string(s)];
  if (!known && retrieved && count >= config_.trigger_threshold) {
    clm_ = clm::update(clm_, clm::Fact{std::string(s), *retrieved});
    internalized_.insert(std::string(s));
    out.row.update = p.c_update;
    out.internalized_now = true;
    events_.push_back({queries_, std::string(s), *retrieved, config_.w_high, config_.w_low});
  }
  ledger_.append(out.row);
  return out;
}

double HybridState::reliance_score(std::string_view s) const {
  if (!internalized(s) && !store_.contains(s)) {
    fail(ErrorCode::kDomain, "reliance score for an unknown input: " + std::string(s));
  }
  return internalized(s) ? config_.w_low : config_.w_high;
}

std::uint64_t HybridState::frequency(std::string_view s) const {
  auto it = freq_.find(s);
  return it == freq_.end() ? 0 : it->second;
}

void HybridState::set_store(RetrievalStore store) {
  if (!(store.space() == store_.space())) {
    fail(ErrorCode::kDimension, "replacement store uses a different output space");
  }
  store_ = std::move(store);
}

bool is_correct(const OutputSpace& space, const std::optional<Dist>& answer,
                std::string_view truth) {
  if (!answer) return false;
  const auto idx = space.index_of(truth);
  return idx && argmax_output(*answer).index == *idx;
}

double measure_robustness(Policy policy, double rho, std::span<const std::string> workload,
                          const RobustnessSetup& setup) {
  if (workload.empty()) fail(ErrorCode::kDomain, "empty robustness workload");
  const auto& clean = setup.clean_store;
  const auto noisy = inject_noise(clean, rho, setup.noise_seed);
  std::size_t correct = 0;
  if (policy == Policy::kPureRag) {
    for (const auto& s : workload) {
      const auto got = noisy.lookup(s);
      if (got && got == clean.truth(s)) ++correct;
    }
  } else {
    HybridState st(clean, setup.config);
    for (const auto& s : setup.warmup) st.handle_query(s, setup.costs);
    st.set_store(noisy);
    for (const auto& s : workload) {
      const auto truth = clean.truth(s);
      const auto out = st.handle_query(s, setup.costs);
      if (truth && is_correct(clean.space(), out.answer, *truth)) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(workload.size());
}

std::vector<std::string> uniform_workload(std::span<const std::string> keys, std::size_t rounds) {
  std::vector<std::string> out;
  out.reserve(keys.size() * rounds);
  for (std::size_t r = 0; r < rounds; ++r) out.insert(out.end(), keys.begin(), keys.end());
  return out;
}

std::vector<std::string> zipf_workload(std::span<const std::string> keys, std::size_t n,
                                       double s, std::uint64_t seed) {
  if (keys.empty()) fail(ErrorCode::kDomain, "Zipf workload over no keys");
  if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorCode::kDomain, "Zipf exponent must be positive");
  std::vector<double> cdf(keys.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    acc += std::pow(static_cast<double>(k + 1), -s);
    cdf[k] = acc;
  }
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.push_back(keys[static_cast<std::size_t>(it - cdf.begin())]);
  }
  return out;
}

double cost_hybrid(std::uint64_t n, const clm::CostParams& p, std::uint64_t trigger_threshold) {
  p.validate();
  if (trigger_threshold < 1) fail(ErrorCode::kDomain, "trigger threshold must be >= 1");
  const auto nd = static_cast<double>(n);
  if (n < trigger_threshold) return nd * (p.c_infer + p.c_query);
  return nd * p.c_infer + static_cast<double>(trigger_threshold) * p.c_query + p.c_update;
}

std::uint64_t hybrid_crossover(const clm::CostParams& p, std::uint64_t trigger_threshold) {
  auto n = clm::crossover(p) + trigger_threshold;
  while (n > 1 && cost_hybrid(n - 1, p, trigger_threshold) < clm::cost_rag(n - 1, p)) --n;
  while (!(cost_hybrid(n, p, trigger_threshold) < clm::cost_rag(n, p))) ++n;
  return n;
}

std::vector<CostCurvePoint> cost_curve(const clm::CostParams& p, std::uint64_t trigger_threshold,
                                       std::uint64_t max_n) {
  const OutputSpace space = OutputSpace::numbered(2, "y");
  HybridState st(RetrievalStore(space, {{"q", space.symbol(0)}}),
                 HybridConfig{trigger_threshold, 1.0, 0.0});
  std::vector<CostCurvePoint> out;
  out.reserve(max_n);
  double hybrid = 0.0;
  for (std::uint64_t n = 1; n <= max_n; ++n) {
    hybrid += st.handle_query("q", p).row.total();
    out.push_back({n, clm::cost_rag(n, p), clm::cost_clm(n, p), hybrid});
  }
  return out;
}

void write_cost_curve_csv(std::ostream& os, std::span<const CostCurvePoint> curve) {
  os << "N,cost_rag,cost_clm,cost_hybrid\n";
  for (const auto& pt : curve) {
    os << pt.n << ',' << format_real(pt.rag) << ',' << format_real(pt.clm) << ','
       << format_real(pt.hybrid) << '\n';
  }
}

void ScenarioConfig::validate() const {
  if (facts < 2) fail(ErrorCode::kDomain, "scenario needs at least 2 facts");
  if (symbols < 2) fail(ErrorCode::kDomain, "scenario needs at least 2 answer symbols");
  if (!(rho >= 0.0 && rho <= 1.0)) fail(ErrorCode::kDomain, "rho outside [0,1]");
  if (warmup_queries == 0 || eval_queries == 0) {
    fail(ErrorCode::kDomain, "scenario workloads must be non-empty");
  }
  if (lossy_fact_cap == 0) fail(ErrorCode::kDomain, "lossy fact cap must be positive");
  hybrid.validate();
  costs.validate();
}

const StrategyRow& ScenarioResult::row(clm::Strategy s) const {
  for (const auto& r : rows) {
    if (r.strategy == s) return r;
  }
  fail(ErrorCode::kDomain, "no row for strategy " + std::string(clm::to_string(s)));
}

bool ScenarioResult::orderings_hold() const {
  const auto& rag = row(clm::Strategy::kPureRag);
  const auto& hyb = row(clm::Strategy::kHybrid);
  const auto& lossy = row(clm::Strategy::kLossyPureClm);
  return rag.forgetting == 0.0 && rag.forgetting <= hyb.forgetting &&
         hyb.forgetting < lossy.forgetting && hyb.robustness > rag.robustness;
}

RetrievalStore make_fact_store(std::size_t facts, std::size_t symbols, std::uint64_t seed) {
  const OutputSpace space = OutputSpace::numbered(symbols, "a");
  Rng rng(seed);
  std::map<std::string, std::string, std::less<>> entries;
  char key[32];
  for (std::size_t i = 0; i < facts; ++i) {
    std::snprintf(key, sizeof key, "fact#%03zu", i);
    entries.emplace(key, space.symbol(uniform_below(rng, symbols)));
  }
  return RetrievalStore(space, std::move(entries));
}

namespace {

// Seeds for the independent streams of one scenario.
struct Seeds {
  std::uint64_t facts, phase_a, phase_b, warmup, eval, noise;
};

Seeds derive_seeds(std::uint64_t seed) {
  Rng rng(seed);
  return {rng(), rng(), rng(), rng(), rng(), rng()};
}

double accuracy_of(const HybridState& st, const RetrievalStore& truth,
                   std::span<const std::string> workload) {
  std::size_t ok = 0;
  for (const auto& s : workload) {
    if (is_correct(truth.space(), st.peek(s), *truth.truth(s))) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(workload.size());
}

double accuracy_of(const clm::ClmState& st, const RetrievalStore& truth,
                   std::span<const std::string> workload) {
  std::size_t ok = 0;
  for (const auto& s : workload) {
    if (clm::answers_correctly(st.current(), {s, *truth.truth(s)})) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(workload.size());
}

// Fraction of facts right at `before` and wrong at `after`, over the facts
// `before` got right.
using Probe = std::function<bool(const std::string&)>;

double forgetting_over(std::span<const std::string> keys, const Probe& before, const Probe& after) {
  std::size_t probes = 0, lost = 0;
  for (const auto& k : keys) {
    if (!before(k)) continue;
    ++probes;
    if (!after(k)) ++lost;
  }
  return probes == 0 ? 0.0 : static_cast<double>(lost) / static_cast<double>(probes);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  const auto seeds = derive_seeds(config.seed);
  const auto store = make_fact_store(config.facts, config.symbols, seeds.facts);
  const auto& space = store.space();
  std::vector<std::string> keys;
  for (const auto& [k, _] : store.entries()) keys.push_back(k);
  const std::span<const std::string> all(keys);
  const auto half = keys.size() / 2;
  const auto old_keys = all.first(half);
  const auto new_keys = all.subspan(half);

  const auto phase_a = zipf_workload(old_keys, config.warmup_queries, config.zipf_s, seeds.phase_a);
  const auto phase_b = zipf_workload(new_keys, config.warmup_queries, config.zipf_s, seeds.phase_b);
  const auto warmup = zipf_workload(all, config.warmup_queries, config.zipf_s, seeds.warmup);
  const auto eval = zipf_workload(all, config.eval_queries, config.zipf_s, seeds.eval);
  const auto noisy = inject_noise(store, config.rho, seeds.noise);
  const auto truth_of = [&](const std::string& k) { return *store.truth(k); };

  ScenarioResult result;

  // Pure RAG: answers are whatever the store returns.
  {
    StrategyRow r{clm::Strategy::kPureRag, 0.0, 0.0, 0.0};
    std::size_t ok = 0, ok_noisy = 0;
    for (const auto& s : eval) {
      if (store.lookup(s) == store.truth(s)) ++ok;
      if (noisy.lookup(s) == store.truth(s)) ++ok_noisy;
    }
    const auto n = static_cast<double>(eval.size());
    r.accuracy = static_cast<double>(ok) / n;
    const auto rag_right = [&](const std::string& k) { return store.lookup(k) == store.truth(k); };
    r.forgetting = forgetting_over(old_keys, rag_right, rag_right);
    r.robustness = static_cast<double>(ok_noisy) / n;
    result.rows.push_back(r);
    result.uniform_rag_accuracy = measure_robustness(
        Policy::kPureRag, config.rho, keys, RobustnessSetup{store, config.hybrid, config.costs, {},
                                                            seeds.noise});
  }

  // Lossy pure CLM: internalizes each fact on first sight under a FIFO cap.
  {
    StrategyRow r{clm::Strategy::kLossyPureClm, 0.0, 0.0, 0.0};
    auto learn = [&](clm::ClmState st, std::span<const std::string> ks) {
      for (const auto& k : ks) st = clm::update(st, {k, truth_of(k)});
      return st;
    };
    const auto empty = clm::ClmState::create(space, clm::UniformRule{}, config.lossy_fact_cap);
    const auto after_a = learn(empty, old_keys);
    const auto after_b = learn(after_a, new_keys);
    r.accuracy = accuracy_of(after_b, store, eval);
    const auto right_at = [&](const clm::ClmState& st) -> Probe {
      return [&st, &truth_of](const std::string& k) {
        return clm::answers_correctly(st.current(), {k, truth_of(k)});
      };
    };
    r.forgetting = forgetting_over(old_keys, right_at(after_a), right_at(after_b));
    // Retrieval noise does not reach a model that never retrieves.
    r.robustness = r.accuracy;
    result.rows.push_back(r);
  }

  // Hybrid.
  {
    StrategyRow r{clm::Strategy::kHybrid, 0.0, 0.0, 0.0};
    HybridState seq(store, config.hybrid);
    for (const auto& s : phase_a) seq.handle_query(s, config.costs);
    const auto probe_a = seq;
    for (const auto& s : phase_b) seq.handle_query(s, config.costs);
    const auto right_at = [&](const HybridState& st) -> Probe {
      return [&st, &space, &truth_of](const std::string& k) {
        return is_correct(space, st.peek(k), truth_of(k));
      };
    };
    r.forgetting = forgetting_over(old_keys, right_at(probe_a), right_at(seq));
    r.accuracy = accuracy_of(seq, store, eval);

    HybridState rob(store, config.hybrid);
    for (const auto& s : warmup) rob.handle_query(s, config.costs);
    rob.set_store(noisy);
    std::size_t ok = 0;
    for (const auto& s : eval) {
      if (is_correct(space, rob.handle_query(s, config.costs).answer, truth_of(s))) ++ok;
    }
    r.robustness = static_cast<double>(ok) / static_cast<double>(eval.size());
    result.reliance = rob.events();
    result.ledger = rob.ledger();
    result.rows.push_back(r);
  }
  return result;
}

void write_strategy_table_csv(std::ostream& os, std::span<const StrategyRow> rows) {
  os << "strategy,accuracy,forgetting,robustness\n";
  for (const auto& r : rows) {
    os << clm::to_string(r.strategy) << ',' << format_real(r.accuracy) << ','
       << format_real(r.forgetting) << ',' << format_real(r.robustness) << '\n';
  }
}

void write_reliance_csv(std::ostream& os, std::span<const InternalizationEvent> events) {
  os << "input,query_index,answer,reliance_before,reliance_after\n";
  for (const auto& e : events) {
    os << csv_field(e.input) << ',' << e.query_index << ',' << csv_field(e.answer) << ','
       << format_real(e.reliance_before) << ',' << format_real(e.reliance_after) << '\n';
  }
}

}  // namespace hallab::hybrid
