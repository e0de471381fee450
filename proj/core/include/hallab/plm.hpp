// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hallab/bytes.hpp"

namespace hallab {

/// Ordered finite set of output strings. Index i is the i-th symbol.
class OutputSpace {
 public:
  explicit OutputSpace(std::vector<std::string> symbols);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(std::size_t i) const { return symbols_.at(i); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::optional<std::size_t> index_of(std::string_view symbol) const;

  /// "y0", "y1", ... "y<n-1>".
  static OutputSpace numbered(std::size_t n, std::string_view prefix = "y");

  void encode(ByteWriter& w) const;
  static OutputSpace decode(ByteReader& r);

  friend bool operator==(const OutputSpace& a, const OutputSpace& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Probability vector over an OutputSpace. Construction validates
/// non-negativity and unit mass (tolerance 1e-9).
class Dist {
 public:
  explicit Dist(std::vector<double> probs);

  static Dist point(std::size_t size, std::size_t index);
  static Dist uniform(std::size_t size);
  /// (1 - weight) * a + weight * b.
  static Dist mix(const Dist& a, const Dist& b, double weight);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  friend bool operator==(const Dist& a, const Dist& b) = default;

 private:
  std::vector<double> probs_;
};

inline constexpr double kMassTolerance = 1e-9;

struct ArgMax {
  std::size_t index;
  double probability;
};

/// Most probable index; ties go to the lowest index.
ArgMax argmax_output(const Dist& d);

enum class PlmKind : std::uint8_t {
  kTabular = 0x01,
  kBudgetSimulator = 0x02,
  kCapacityLearner = 0x03,
  kOracleAugmented = 0x04,
  kClmSnapshot = 0x05,
};

std::string_view to_string(PlmKind kind);

/// A probabilistic language model, held as its canonical descriptor.
///
/// Descriptor framing: [u8 kind tag][u32 big-endian payload length][payload].
/// All integers are big-endian, reals are IEEE-754 binary64 bit patterns
/// written big-endian, strings are a u32 length followed by raw bytes, and an
/// output space is a u32 count followed by that many strings. Payloads:
///
///   Tabular (0x01):         space, u8 default mode (0 uniform, 1 explicit
///                           followed by |space| reals), u32 entry count, then
///                           entries sorted by input bytes: input string,
///                           |space| reals.
///   BudgetSimulator (0x02): u32 budget, real confidence, 2 reals fallback.
///   CapacityLearner (0x03): u64 budget bits, string embedded Tabular
///                           descriptor (base rule), string patch input,
///                           u32 patch bits, u32 stored bits, string stored
///                           prefix bytes.
///   OracleAugmented (0x04): string oracle id, space.
///   ClmSnapshot (0x05):     space, u8 base rule (0 uniform; 1 string holding
///                           an embedded descriptor; 2 affine-softmax head),
///                           u32 fact count, facts in insertion order: input
///                           string, answer string.
///
/// The descriptor is not validated on construction; malformed descriptors
/// surface as ErrorCode::kDecode when evaluated.
class Plm {
 public:
  explicit Plm(Bytes descriptor) : descriptor_(std::move(descriptor)) {}

  static Plm frame(PlmKind kind, std::span<const std::uint8_t> payload);

  std::span<const std::uint8_t> descriptor() const { return descriptor_; }
  const Bytes& descriptor_bytes() const { return descriptor_; }
  PlmKind kind() const;
  /// Payload with the framing checked.
  std::span<const std::uint8_t> payload() const;

  friend bool operator==(const Plm& a, const Plm& b) = default;

 private:
  Bytes descriptor_;
};

/// 8 x descriptor byte length.
std::uint64_t capacity_of(const Plm& h);

/// Evaluates any self-contained model kind. OracleAugmented models need their
/// oracle and are evaluated through OracleAugmentedPlm instead.
Dist eval_plm(const Plm& h, std::string_view s);

/// The output space a model's distributions are indexed by.
OutputSpace plm_output_space(const Plm& h);

/// Probability the model assigns to an arbitrary output string at s. Unlike
/// eval_plm this also covers outputs outside an enumerable space (patch
/// strings of capacity learners, raw fact answers of CLM snapshots).
double output_probability(const Plm& h, std::string_view s,
                          std::span<const std::uint8_t> output);

/// Builds the canonical Tabular descriptor. Entries must match the space size.
Plm make_tabular(const OutputSpace& space, const std::map<std::string, Dist>& table,
                 const std::optional<Dist>& fallback = std::nullopt);

/// Decoded form of a Tabular descriptor.
struct TabularContents {
  OutputSpace space;
  std::optional<Dist> fallback;  // nullopt means uniform
  std::map<std::string, Dist> table;
};
TabularContents decode_tabular(const Plm& h);

/// Relational truth f_R: each input maps to a non-empty set of correct
/// indices. An optional default image covers inputs outside the table.
class RelationalTruth {
 public:
  explicit RelationalTruth(OutputSpace space) : space_(std::move(space)) {}

  void set(std::string input, const std::set<std::size_t>& image);
  /// Same as set() with the image given as a membership mask.
  void set_mask(std::string input, std::vector<bool> mask);
  /// Every input not explicitly set maps to the full output space.
  void default_to_full_space() { default_full_ = true; }

  const OutputSpace& space() const { return space_; }
  bool contains(std::string_view input) const;
  /// Throws ErrorCode::kDomain outside the truth's domain.
  std::set<std::size_t> image(std::string_view input) const;
  /// Membership mask for an explicit input, nullptr when a default full image
  /// applies. Throws like image().
  const std::vector<bool>* find_mask(std::string_view input) const;
  std::size_t explicit_size() const { return images_.size(); }

 private:
  OutputSpace space_;
  std::map<std::string, std::vector<bool>, std::less<>> images_;
  bool default_full_ = false;
};

/// Probabilistic truth f_P: each input maps to a distribution.
class ProbabilisticTruth {
 public:
  explicit ProbabilisticTruth(OutputSpace space) : space_(std::move(space)) {}

  void set(std::string input, Dist d);
  const OutputSpace& space() const { return space_; }
  bool contains(std::string_view input) const;
  const Dist& at(std::string_view input) const;
  const std::map<std::string, Dist, std::less<>>& entries() const { return entries_; }

  /// Canonical bytes of the whole mapping (used for complexity estimates).
  Bytes serialize() const;

 private:
  OutputSpace space_;
  std::map<std::string, Dist, std::less<>> entries_;
};

}  // namespace hallab
