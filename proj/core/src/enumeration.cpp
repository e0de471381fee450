// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/enumeration.hpp"

#include <algorithm>
#include <limits>

#include "hallab/error.hpp"

namespace hallab {

namespace {

__extension__ using u128 = unsigned __int128;

// C(n, k) with overflow detection; nullopt-free, throws on overflow.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  u128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) {
      fail(ErrorCode::kEnumerationTooLarge, "binomial coefficient overflows 64 bits");
    }
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace

std::uint64_t composition_count(std::uint32_t q, std::size_t parts) {
  if (parts == 0) return q == 0 ? 1 : 0;
  return binomial(static_cast<std::uint64_t>(q) + parts - 1, parts - 1);
}

std::vector<std::uint32_t> unrank_composition(std::uint32_t q, std::size_t parts,
                                              std::uint64_t rank) {
  if (rank >= composition_count(q, parts)) {
    fail(ErrorCode::kDomain, "composition rank out of range");
  }
  std::vector<std::uint32_t> out(parts, 0);
  std::uint32_t remaining = q;
  for (std::size_t j = 0; j + 1 < parts; ++j) {
    const std::size_t left = parts - j - 1;  // parts after position j
    for (std::uint32_t c = 0; c <= remaining; ++c) {
      const auto block = composition_count(remaining - c, left);
      if (rank < block) {
        out[j] = c;
        remaining -= c;
        break;
      }
      rank -= block;
    }
  }
  out[parts - 1] = remaining;
  return out;
}

PlmEnumeration::PlmEnumeration(OutputSpace space, std::vector<std::string> inputs,
                               std::uint32_t q, std::uint64_t cap)
    : space_(std::move(space)), inputs_(std::move(inputs)), q_(q) {
  if (q_ < 2) fail(ErrorCode::kDomain, "quantization level must be >= 2");
  std::sort(inputs_.begin(), inputs_.end());
  if (std::adjacent_find(inputs_.begin(), inputs_.end()) != inputs_.end()) {
    fail(ErrorCode::kDomain, "enumeration inputs must be distinct");
  }
  per_input_ = composition_count(q_, space_.size());
  u128 total = 1;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    total *= per_input_;
    if (total > cap) {
      fail(ErrorCode::kEnumerationTooLarge,
           "enumeration exceeds cap of " + std::to_string(cap) + " models");
    }
  }
  size_ = static_cast<std::uint64_t>(total);
}

Dist PlmEnumeration::cell(std::uint64_t rank) const {
  const auto parts = unrank_composition(q_, space_.size(), rank);
  std::vector<double> p(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    p[i] = static_cast<double>(parts[i]) / static_cast<double>(q_);
  }
  return Dist(std::move(p));
}

Plm PlmEnumeration::at(std::uint64_t index) const {
  if (index >= size_) fail(ErrorCode::kDomain, "enumeration index out of range");
  // Mixed radix, first (smallest) input most significant: matches the byte
  // order of the sorted table entries in the descriptor.
  std::vector<std::uint64_t> digits(inputs_.size());
  for (std::size_t k = inputs_.size(); k-- > 0;) {
    digits[k] = index % per_input_;
    index /= per_input_;
  }
  std::map<std::string, Dist> table;
  for (std::size_t k = 0; k < inputs_.size(); ++k) table.emplace(inputs_[k], cell(digits[k]));
  return make_tabular(space_, table);
}

PlmEnumeration enumerate_plms(const OutputSpace& space, std::vector<std::string> inputs,
                              std::uint32_t q, std::uint64_t cap) {
  return PlmEnumeration(space, std::move(inputs), q, cap);
}

}  // namespace hallab
