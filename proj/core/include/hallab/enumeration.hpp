// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hallab/plm.hpp"

namespace hallab {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1ULL << 24;
inline constexpr std::uint32_t kDefaultQuantization = 8;

/// Number of ways to write q as an ordered sum of `parts` non-negative
/// integers, C(q + parts - 1, parts - 1). Throws kEnumerationTooLarge on
/// overflow of 64 bits.
std::uint64_t composition_count(std::uint32_t q, std::size_t parts);

/// The lexicographically `rank`-th composition of q into `parts` parts.
std::vector<std::uint32_t> unrank_composition(std::uint32_t q, std::size_t parts,
                                              std::uint64_t rank);

/// Lazy, indexable sequence of every tabular PLM over a fixed input list whose
/// per-input probabilities are multiples of 1/q, in ascending lexicographic
/// descriptor order.
class PlmEnumeration {
 public:
  PlmEnumeration(OutputSpace space, std::vector<std::string> inputs, std::uint32_t q,
                 std::uint64_t cap);

  std::uint64_t size() const { return size_; }
  Plm at(std::uint64_t index) const;
  /// Quantized distribution of the rank-th composition.
  Dist cell(std::uint64_t rank) const;

  const OutputSpace& space() const { return space_; }
  const std::vector<std::string>& inputs() const { return inputs_; }
  std::uint32_t quantization() const { return q_; }
  std::uint64_t per_input_count() const { return per_input_; }

 private:
  OutputSpace space_;
  std::vector<std::string> inputs_;  // sorted, unique
  std::uint32_t q_;
  std::uint64_t per_input_;
  std::uint64_t size_;
};

PlmEnumeration enumerate_plms(const OutputSpace& space, std::vector<std::string> inputs,
                              std::uint32_t q = kDefaultQuantization,
                              std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace hallab
