// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/plm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hallab/error.hpp"
#include "kinds.hpp"

namespace hallab {

OutputSpace::OutputSpace(std::vector<std::string> symbols)
    : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2) {
    fail(ErrorCode::kDomain, "output space needs at least 2 symbols");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], i).second) {
      fail(ErrorCode::kDomain, "duplicate output symbol '" + symbols_[i] + "'");
    }
  }
}

std::optional<std::size_t> OutputSpace::index_of(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

OutputSpace OutputSpace::numbered(std::size_t n, std::string_view prefix) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return OutputSpace(std::move(out));
}

void OutputSpace::encode(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(symbols_.size()));
  for (const auto& s : symbols_) w.str(s);
}

OutputSpace OutputSpace::decode(ByteReader& r) {
  const auto n = r.u32();
  if (n > r.remaining() / 4) fail(ErrorCode::kDecode, "output space count too large");
  std::vector<std::string> symbols;
  symbols.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) symbols.push_back(r.str());
  try {
    return OutputSpace(std::move(symbols));
  } catch (const Error& e) {
    fail(ErrorCode::kDecode, std::string("invalid output space: ") + e.what());
  }
}

Dist::Dist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) fail(ErrorCode::kDomain, "empty distribution");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      fail(ErrorCode::kDomain, "distribution entry is negative or not finite");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kMassTolerance) {
    fail(ErrorCode::kDomain, "distribution mass " + std::to_string(sum) + " != 1");
  }
}

Dist Dist::point(std::size_t size, std::size_t index) {
  if (index >= size) fail(ErrorCode::kDimension, "point mass index out of range");
  std::vector<double> p(size, 0.0);
  p[index] = 1.0;
  return Dist(std::move(p));
}

Dist Dist::uniform(std::size_t size) {
  return Dist(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Dist Dist::mix(const Dist& a, const Dist& b, double weight) {
  if (a.size() != b.size()) fail(ErrorCode::kDimension, "mixing distributions of different size");
  if (!(weight >= 0.0 && weight <= 1.0)) fail(ErrorCode::kDomain, "mixing weight outside [0,1]");
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - weight) * a[i] + weight * b[i];
  return Dist(std::move(p));
}

ArgMax argmax_output(const Dist& d) {
  ArgMax best{0, d[0]};
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > best.probability) best = {i, d[i]};
  }
  return best;
}

std::string_view to_string(PlmKind kind) {
  switch (kind) {
    case PlmKind::kTabular: return "Tabular";
    case PlmKind::kBudgetSimulator: return "BudgetSimulator";
    case PlmKind::kCapacityLearner: return "CapacityLearner";
    case PlmKind::kOracleAugmented: return "OracleAugmented";
    case PlmKind::kClmSnapshot: return "ClmSnapshot";
  }
  return "Unknown";
}

Plm Plm::frame(PlmKind kind, std::span<const std::uint8_t> payload) {
  if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kDomain, "payload too large");
  }
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  return Plm(std::move(w).take());
}

PlmKind Plm::kind() const {
  if (descriptor_.empty()) fail(ErrorCode::kDecode, "empty descriptor");
  const auto tag = descriptor_[0];
  if (tag < 0x01 || tag > 0x05) {
    fail(ErrorCode::kDecode, "unknown kind tag " + std::to_string(tag));
  }
  return static_cast<PlmKind>(tag);
}

std::span<const std::uint8_t> Plm::payload() const {
  kind();
  ByteReader r(descriptor_);
  r.u8();
  const auto len = r.u32();
  if (r.remaining() != len) {
    fail(ErrorCode::kDecode, "payload length " + std::to_string(len) +
                                 " does not match " + std::to_string(r.remaining()));
  }
  return std::span<const std::uint8_t>(descriptor_).subspan(5);
}

std::uint64_t capacity_of(const Plm& h) {
  return 8ULL * static_cast<std::uint64_t>(h.descriptor().size());
}

Dist eval_plm(const Plm& h, std::string_view s) {
  const auto payload = h.payload();
  switch (h.kind()) {
    case PlmKind::kTabular: return detail::eval_tabular(payload, s);
    case PlmKind::kBudgetSimulator: return detail::eval_budget_simulator(payload, s);
    case PlmKind::kCapacityLearner: return detail::eval_capacity_learner(payload, s);
    case PlmKind::kClmSnapshot: return detail::eval_clm_snapshot(payload, s);
    case PlmKind::kOracleAugmented:
      fail(ErrorCode::kDomain, "oracle-augmented model must be evaluated with its oracle");
  }
  fail(ErrorCode::kDecode, "unreachable kind");
}

OutputSpace plm_output_space(const Plm& h) {
  const auto payload = h.payload();
  switch (h.kind()) {
    case PlmKind::kTabular: return detail::tabular_space(payload);
    case PlmKind::kBudgetSimulator: return detail::budget_simulator_space();
    case PlmKind::kCapacityLearner: return detail::capacity_learner_space(payload);
    case PlmKind::kClmSnapshot: return detail::clm_snapshot_space(payload);
    case PlmKind::kOracleAugmented: return detail::oracle_augmented_space(payload);
  }
  fail(ErrorCode::kDecode, "unreachable kind");
}

double output_probability(const Plm& h, std::string_view s,
                          std::span<const std::uint8_t> output) {
  switch (h.kind()) {
    case PlmKind::kCapacityLearner:
      return detail::capacity_learner_probability(h.payload(), s, output);
    case PlmKind::kClmSnapshot:
      return detail::clm_snapshot_probability(h.payload(), s, output);
    default: {
      const auto space = plm_output_space(h);
      const auto idx = space.index_of(to_string(output));
      if (!idx) return 0.0;
      return eval_plm(h, s)[*idx];
    }
  }
}

namespace {

void write_probs(ByteWriter& w, const Dist& d) {
  for (double p : d.probs()) w.f64(p);
}

Dist read_probs(ByteReader& r, std::size_t n) {
  std::vector<double> p(n);
  for (auto& v : p) v = r.f64();
  try {
    return Dist(std::move(p));
  } catch (const Error& e) {
    fail(ErrorCode::kDecode, std::string("invalid stored distribution: ") + e.what());
  }
}

}  // namespace

Plm make_tabular(const OutputSpace& space, const std::map<std::string, Dist>& table,
                 const std::optional<Dist>& fallback) {
  ByteWriter w;
  space.encode(w);
  if (fallback) {
    if (fallback->size() != space.size()) fail(ErrorCode::kDimension, "fallback size mismatch");
    w.u8(1);
    write_probs(w, *fallback);
  } else {
    w.u8(0);
  }
  w.u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& [input, d] : table) {
    if (d.size() != space.size()) {
      fail(ErrorCode::kDimension, "table entry for '" + input + "' has wrong size");
    }
    w.str(input);
    write_probs(w, d);
  }
  return Plm::frame(PlmKind::kTabular, w.bytes());
}

TabularContents decode_tabular(const Plm& h) {
  if (h.kind() != PlmKind::kTabular) fail(ErrorCode::kDecode, "not a tabular descriptor");
  ByteReader r(h.payload());
  auto space = OutputSpace::decode(r);
  std::optional<Dist> fallback;
  const auto mode = r.u8();
  if (mode == 1) {
    fallback = read_probs(r, space.size());
  } else if (mode != 0) {
    fail(ErrorCode::kDecode, "unknown default mode");
  }
  const auto n = r.u32();
  std::map<std::string, Dist> table;
  std::string prev;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto input = r.str();
    if (i > 0 && !(prev < input)) fail(ErrorCode::kDecode, "tabular entries not sorted/unique");
    prev = input;
    table.emplace(std::move(input), read_probs(r, space.size()));
  }
  r.expect_done("tabular payload");
  return TabularContents{std::move(space), std::move(fallback), std::move(table)};
}

namespace detail {

// Streaming lookup: walks the payload without materializing the table.
Dist eval_tabular(std::span<const std::uint8_t> payload, std::string_view s) {
  ByteReader r(payload);
  // Only the symbol count matters here; full validation happens on decode.
  const std::size_t n = r.u32();
  if (n < 2 || n > r.remaining() / 4) fail(ErrorCode::kDecode, "bad output space count");
  for (std::size_t i = 0; i < n; ++i) r.str();
  std::optional<Dist> fallback;
  const auto mode = r.u8();
  if (mode == 1) {
    fallback = read_probs(r, n);
  } else if (mode != 0) {
    fail(ErrorCode::kDecode, "unknown default mode");
  }
  const auto count = r.u32();
  std::optional<Dist> hit;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto input = r.str();
    if (!hit && input == s) {
      hit = read_probs(r, n);
    } else {
      r.raw(8 * n);
    }
  }
  r.expect_done("tabular payload");
  if (hit) return *hit;
  if (fallback) return *fallback;
  return Dist::uniform(n);
}

OutputSpace tabular_space(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  return OutputSpace::decode(r);
}

OutputSpace oracle_augmented_space(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  r.str();
  auto space = OutputSpace::decode(r);
  r.expect_done("oracle-augmented payload");
  return space;
}

}  // namespace detail

void RelationalTruth::set(std::string input, const std::set<std::size_t>& image) {
  if (image.empty()) fail(ErrorCode::kDomain, "relational image must be non-empty");
  if (*image.rbegin() >= space_.size()) fail(ErrorCode::kDimension, "image index out of range");
  std::vector<bool> mask(space_.size(), false);
  for (auto y : image) mask[y] = true;
  images_.insert_or_assign(std::move(input), std::move(mask));
}

void RelationalTruth::set_mask(std::string input, std::vector<bool> mask) {
  if (mask.size() != space_.size()) fail(ErrorCode::kDimension, "image mask size mismatch");
  if (std::find(mask.begin(), mask.end(), true) == mask.end()) {
    fail(ErrorCode::kDomain, "relational image must be non-empty");
  }
  images_.insert_or_assign(std::move(input), std::move(mask));
}

const std::vector<bool>* RelationalTruth::find_mask(std::string_view input) const {
  if (auto it = images_.find(input); it != images_.end()) return &it->second;
  if (default_full_) return nullptr;
  fail(ErrorCode::kDomain, "input '" + std::string(input) + "' outside relational truth domain");
}

bool RelationalTruth::contains(std::string_view input) const {
  return default_full_ || images_.find(input) != images_.end();
}

std::set<std::size_t> RelationalTruth::image(std::string_view input) const {
  if (auto it = images_.find(input); it != images_.end()) {
    std::set<std::size_t> out;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      if (it->second[i]) out.insert(out.end(), i);
    }
    return out;
  }
  if (default_full_) {
    std::set<std::size_t> all;
    for (std::size_t i = 0; i < space_.size(); ++i) all.insert(all.end(), i);
    return all;
  }
  fail(ErrorCode::kDomain, "input '" + std::string(input) + "' outside relational truth domain");
}

void ProbabilisticTruth::set(std::string input, Dist d) {
  if (d.size() != space_.size()) fail(ErrorCode::kDimension, "truth distribution size mismatch");
  entries_.insert_or_assign(std::move(input), std::move(d));
}

bool ProbabilisticTruth::contains(std::string_view input) const {
  return entries_.find(input) != entries_.end();
}

const Dist& ProbabilisticTruth::at(std::string_view input) const {
  auto it = entries_.find(input);
  if (it == entries_.end()) {
    fail(ErrorCode::kDomain, "input '" + std::string(input) + "' outside probabilistic truth domain");
  }
  return it->second;
}

Bytes ProbabilisticTruth::serialize() const {
  ByteWriter w;
  space_.encode(w);
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [input, d] : entries_) {
    w.str(input);
    write_probs(w, d);
  }
  return std::move(w).take();
}

}  // namespace hallab
