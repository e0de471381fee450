// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/clm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "hallab/error.hpp"
#include "hallab/pumping.hpp"
#include "kinds.hpp"

namespace hallab::clm {

namespace {

constexpr std::uint8_t kRuleUniform = 0;
constexpr std::uint8_t kRuleEmbedded = 1;
constexpr std::uint8_t kRuleAffine = 2;

std::vector<double> read_reals(ByteReader& r, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = r.f64();
  return out;
}

std::vector<double> parse_features(std::string_view s) {
  std::vector<double> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    auto tok = s.substr(0, comma);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      fail(ErrorCode::kDomain, "input is not a comma-separated feature vector");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

Dist AffineSoftmaxHead::eval(std::span<const double> x) const {
  if (x.size() != input_dim) fail(ErrorCode::kDimension, "feature vector has wrong length");
  std::vector<double> z(latent_dim);
  for (std::uint32_t j = 0; j < latent_dim; ++j) {
    double acc = encoder_bias[j];
    for (std::uint32_t i = 0; i < input_dim; ++i) acc += encoder[j * input_dim + i] * x[i];
    z[j] = acc;
  }
  std::vector<double> logits(classes);
  for (std::uint32_t c = 0; c < classes; ++c) {
    double acc = readout_bias[c];
    for (std::uint32_t j = 0; j < latent_dim; ++j) acc += readout[c * latent_dim + j] * z[j];
    logits[c] = acc;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - top);
    sum += l;
  }
  for (auto& l : logits) l /= sum;
  return Dist(std::move(logits));
}

Plm Snapshot::encode() const {
  ByteWriter w;
  space.encode(w);
  if (std::holds_alternative<UniformRule>(base)) {
    w.u8(kRuleUniform);
  } else if (const auto* plm = std::get_if<Plm>(&base)) {
    w.u8(kRuleEmbedded);
    w.blob(plm->descriptor());
  } else {
    const auto& head = std::get<AffineSoftmaxHead>(base);
    if (head.classes != space.size()) fail(ErrorCode::kDimension, "head classes != space size");
    w.u8(kRuleAffine);
    w.u32(head.input_dim);
    w.u32(head.latent_dim);
    w.u32(head.classes);
    for (double v : head.encoder) w.f64(v);
    for (double v : head.encoder_bias) w.f64(v);
    for (double v : head.readout) w.f64(v);
    for (double v : head.readout_bias) w.f64(v);
  }
  w.u32(static_cast<std::uint32_t>(facts.size()));
  for (const auto& f : facts) {
    w.str(f.input);
    w.str(f.answer);
  }
  return Plm::frame(PlmKind::kClmSnapshot, w.bytes());
}

namespace {

Snapshot decode_payload(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto space = OutputSpace::decode(r);
  BaseRule base = UniformRule{};
  switch (r.u8()) {
    case kRuleUniform: break;
    case kRuleEmbedded: base = Plm(r.blob()); break;
    case kRuleAffine: {
      AffineSoftmaxHead head;
      head.input_dim = r.u32();
      head.latent_dim = r.u32();
      head.classes = r.u32();
      const std::uint64_t need =
          8ULL * (static_cast<std::uint64_t>(head.latent_dim) * head.input_dim + head.latent_dim +
                  static_cast<std::uint64_t>(head.classes) * head.latent_dim + head.classes);
      if (need > r.remaining() || head.classes != space.size()) {
        fail(ErrorCode::kDecode, "inconsistent affine head dimensions");
      }
      head.encoder = read_reals(r, std::size_t{head.latent_dim} * head.input_dim);
      head.encoder_bias = read_reals(r, head.latent_dim);
      head.readout = read_reals(r, std::size_t{head.classes} * head.latent_dim);
      head.readout_bias = read_reals(r, head.classes);
      base = std::move(head);
      break;
    }
    default: fail(ErrorCode::kDecode, "unknown base rule tag");
  }
  const auto n = r.u32();
  std::vector<Fact> facts;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto input = r.str();
    auto answer = r.str();
    facts.push_back({std::move(input), std::move(answer)});
  }
  r.expect_done("clm snapshot payload");
  return Snapshot{std::move(space), std::move(base), std::move(facts)};
}

const Fact* find_fact(const Snapshot& s, std::string_view input) {
  for (const auto& f : s.facts) {
    if (f.input == input) return &f;
  }
  return nullptr;
}

Dist eval_base(const Snapshot& snap, std::string_view s) {
  if (std::holds_alternative<UniformRule>(snap.base)) return Dist::uniform(snap.space.size());
  if (const auto* plm = std::get_if<Plm>(&snap.base)) {
    auto d = eval_plm(*plm, s);
    if (d.size() != snap.space.size()) fail(ErrorCode::kDimension, "embedded base space differs");
    return d;
  }
  return std::get<AffineSoftmaxHead>(snap.base).eval(parse_features(s));
}

}  // namespace

Snapshot Snapshot::decode(const Plm& h) {
  if (h.kind() != PlmKind::kClmSnapshot) fail(ErrorCode::kDecode, "not a CLM snapshot");
  return decode_payload(h.payload());
}

ClmState::ClmState(Snapshot snap, std::optional<std::size_t> cap)
    : snapshot_(std::move(snap)), current_(snapshot_.encode()), fact_cap_(cap) {
  capacity_history_.push_back(capacity_of(current_));
}

ClmState ClmState::create(OutputSpace space, BaseRule base, std::optional<std::size_t> fact_cap) {
  if (fact_cap && *fact_cap == 0) fail(ErrorCode::kDomain, "fact cap must be positive");
  if (const auto* plm = std::get_if<Plm>(&base)) {
    if (!(plm_output_space(*plm) == space)) {
      fail(ErrorCode::kDimension, "embedded base model uses a different output space");
    }
  }
  return ClmState(Snapshot{std::move(space), std::move(base), {}}, fact_cap);
}

bool ClmState::knows(std::string_view input) const {
  return find_fact(snapshot_, input) != nullptr;
}

Bytes fact_bytes(const Fact& d) {
  ByteWriter w;
  w.str(d.input);
  w.str(d.answer);
  return std::move(w).take();
}

ClmState update(const ClmState& state, const Fact& d) {
  ClmState next = state;
  auto& facts = next.snapshot_.facts;
  const auto novelty = pumping::k_hat_conditional(fact_bytes(d), state.current_.descriptor());
  auto it = std::find_if(facts.begin(), facts.end(),
                         [&](const Fact& f) { return f.input == d.input; });
  if (it != facts.end()) {
    if (it->answer != d.answer) {
      next.audit_.push_back({state.t_ + 1, d.input, it->answer, d.answer});
      facts.erase(it);
      facts.push_back(d);
    }
  } else {
    facts.push_back(d);
  }
  if (next.fact_cap_) {
    while (facts.size() > *next.fact_cap_) {
      next.evicted_.push_back(facts.front());
      facts.erase(facts.begin());
    }
  }
  next.current_ = next.snapshot_.encode();
  ++next.t_;
  next.capacity_history_.push_back(capacity_of(next.current_));
  next.novelty_history_.push_back(novelty);
  return next;
}

std::optional<std::string> snapshot_fact(const Plm& h, std::string_view s) {
  const auto snap = Snapshot::decode(h);
  if (const auto* f = find_fact(snap, s)) return f->answer;
  return std::nullopt;
}

std::optional<Plm> snapshot_base_model(const Plm& h) {
  const auto snap = Snapshot::decode(h);
  if (const auto* plm = std::get_if<Plm>(&snap.base)) return *plm;
  return std::nullopt;
}

void CostParams::validate() const {
  if (!(c_infer > 0.0 && c_query > 0.0 && c_update > 0.0)) {
    fail(ErrorCode::kDomain, "cost parameters must be strictly positive");
  }
}

double cost_rag(std::uint64_t n, const CostParams& p) {
  p.validate();
  return static_cast<double>(n) * (p.c_infer + p.c_query);
}

double cost_clm(std::uint64_t n, const CostParams& p) {
  p.validate();
  if (n == 0) fail(ErrorCode::kDomain, "CLM cost needs N >= 1 (the first query carries the update)");
  return (p.c_infer + p.c_update) + static_cast<double>(n - 1) * p.c_infer;
}

std::uint64_t crossover(const CostParams& p) {
  p.validate();
  auto n = static_cast<std::uint64_t>(std::floor(p.c_update / p.c_query)) + 1;
  // Guard the closed form against rounding in the division.
  while (n > 1 && cost_clm(n - 1, p) < cost_rag(n - 1, p)) --n;
  while (!(cost_clm(n, p) < cost_rag(n, p))) ++n;
  return n;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kPureRag: return "PureRag";
    case Strategy::kClm: return "Clm";
    case Strategy::kHybrid: return "Hybrid";
    case Strategy::kLossyPureClm: return "LossyPureClm";
  }
  return "Unknown";
}

void CostLedger::append(LedgerRow row) {
  totals_[row.strategy] += row.total();
  rows_.push_back(std::move(row));
}

double CostLedger::total(Strategy s) const {
  auto it = totals_.find(s);
  return it == totals_.end() ? 0.0 : it->second;
}

double CostLedger::total_at(Strategy s, std::uint64_t query_index) const {
  double acc = 0.0;
  for (const auto& r : rows_) {
    if (r.strategy == s && r.query_index <= query_index) acc += r.total();
  }
  return acc;
}

bool CostLedger::consistent() const {
  std::map<Strategy, double> again;
  for (const auto& r : rows_) again[r.strategy] += r.total();
  return again == totals_;
}

CostLedger simulate_rag(std::uint64_t n, const CostParams& p, std::string_view input) {
  p.validate();
  CostLedger ledger;
  for (std::uint64_t i = 1; i <= n; ++i) {
    ledger.append({Strategy::kPureRag, i, std::string(input), p.c_infer, p.c_query, 0.0});
  }
  return ledger;
}

CostLedger simulate_clm(std::uint64_t n, const CostParams& p, std::string_view input) {
  p.validate();
  CostLedger ledger;
  for (std::uint64_t i = 1; i <= n; ++i) {
    ledger.append({Strategy::kClm, i, std::string(input), p.c_infer, 0.0,
                   i == 1 ? p.c_update : 0.0});
  }
  return ledger;
}

bool answers_correctly(const Plm& h, const Fact& fact) {
  const auto space = plm_output_space(h);
  const auto idx = space.index_of(fact.answer);
  if (!idx) return false;
  return argmax_output(eval_plm(h, fact.input)).index == *idx;
}

double forgetting_rate(const ClmState& before, const ClmState& after,
                       std::span<const Fact> probes) {
  if (probes.empty()) fail(ErrorCode::kDomain, "forgetting rate needs a non-empty probe set");
  std::size_t forgotten = 0;
  for (const auto& f : probes) {
    if (!answers_correctly(before.current(), f)) {
      fail(ErrorCode::kDomain, "probe '" + f.input + "' is not known by the earlier state");
    }
    if (!answers_correctly(after.current(), f)) ++forgotten;
  }
  return static_cast<double>(forgotten) / static_cast<double>(probes.size());
}

}  // namespace hallab::clm

namespace hallab::detail {

Dist eval_clm_snapshot(std::span<const std::uint8_t> payload, std::string_view s) {
  const auto snap = clm::decode_payload(payload);
  if (const auto* f = clm::find_fact(snap, s)) {
    if (auto idx = snap.space.index_of(f->answer)) return Dist::point(snap.space.size(), *idx);
  }
  return clm::eval_base(snap, s);
}

OutputSpace clm_snapshot_space(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  return OutputSpace::decode(r);
}

double clm_snapshot_probability(std::span<const std::uint8_t> payload, std::string_view s,
                                std::span<const std::uint8_t> output) {
  const auto snap = clm::decode_payload(payload);
  if (const auto* f = clm::find_fact(snap, s)) {
    // Compare as bytes: plain char may be signed.
    const auto same = std::equal(f->answer.begin(), f->answer.end(), output.begin(), output.end(),
                                 [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; });
    return same ? 1.0 : 0.0;
  }
  if (const auto* plm = std::get_if<Plm>(&snap.base)) return output_probability(*plm, s, output);
  const auto idx = snap.space.index_of(to_string(output));
  if (!idx) return 0.0;
  return clm::eval_base(snap, s)[*idx];
}

}  // namespace hallab::detail
