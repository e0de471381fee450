// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Compressor-based complexity surrogate and capacity-limited learners facing
// truths patched with incompressible content.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hallab/bytes.hpp"
#include "hallab/metrics.hpp"
#include "hallab/plm.hpp"

namespace hallab::pumping {

class Compressor {
 public:
  virtual ~Compressor() = default;
  virtual Bytes compress(std::span<const std::uint8_t> in) const = 0;
  virtual Bytes decompress(std::span<const std::uint8_t> in) const = 0;
  virtual std::string name() const = 0;
};

/// zlib stream at maximum compression; the original length is carried out of
/// band by decompress's growth loop.
class ZlibCompressor final : public Compressor {
 public:
  Bytes compress(std::span<const std::uint8_t> in) const override;
  Bytes decompress(std::span<const std::uint8_t> in) const override;
  std::string name() const override { return "zlib-9"; }
};

const Compressor& default_compressor();

/// 8 x |compress(x)|, after checking the round trip (kIntegrity on mismatch).
std::uint64_t k_hat(std::span<const std::uint8_t> x, const Compressor& c = default_compressor());

/// k_hat(context || x) - k_hat(context), floored at zero.
std::uint64_t k_hat_conditional(std::span<const std::uint8_t> x,
                                std::span<const std::uint8_t> context,
                                const Compressor& c = default_compressor());

inline constexpr double kIncompressibleRatio = 0.95;
inline constexpr int kMaxRejections = 100;

/// Seeded uniform bytes accepted only when k_hat >= 0.95 x 8 x length.
Bytes rand_incompressible(std::size_t length_bytes, std::uint64_t seed,
                          const Compressor& c = default_compressor());

/// Patch value of any positive length: rand_incompressible from 16 bytes up;
/// shorter strings come straight from the same seeded byte source, since the
/// compressor's fixed overhead says nothing about them.
Bytes rand_patch(std::size_t length_bytes, std::uint64_t seed,
                 const Compressor& c = default_compressor());

/// Base truth everywhere except s*, where the output must be exactly z.
class PatchedTruth {
 public:
  PatchedTruth(ProbabilisticTruth base, std::string patch_input, Bytes patch_value,
               const Compressor& c = default_compressor());

  const ProbabilisticTruth& base() const { return base_; }
  const std::string& patch_input() const { return patch_input_; }
  const Bytes& patch_value() const { return patch_value_; }
  std::uint64_t patch_bits() const { return 8ULL * patch_value_.size(); }

  /// The base already answers s* deterministically with z's bytes.
  bool base_agrees() const { return base_agrees_; }

  /// Base distribution at s != s*; kDomain at s* (its output is z, not a
  /// symbol of the base space) and outside the base.
  const Dist& at(std::string_view s) const;

  // Complexity bookkeeping.
  std::uint64_t base_k_hat() const { return base_k_hat_; }
  std::uint64_t patched_k_hat() const { return patched_k_hat_; }
  std::uint64_t patch_k_hat() const { return patch_k_hat_; }
  std::int64_t complexity_delta() const {
    return static_cast<std::int64_t>(patched_k_hat_) - static_cast<std::int64_t>(base_k_hat_);
  }

 private:
  ProbabilisticTruth base_;
  std::string patch_input_;
  Bytes patch_value_;
  bool base_agrees_ = false;
  std::uint64_t base_k_hat_ = 0;
  std::uint64_t patched_k_hat_ = 0;
  std::uint64_t patch_k_hat_ = 0;
};

PatchedTruth build_patched_truth(ProbabilisticTruth base, std::string patch_input, Bytes z);

/// Decoded capacity learner.
struct CapacityLearner {
  std::uint64_t budget_bits;
  Plm base_rule;  // Tabular
  std::string patch_input;
  std::uint32_t patch_bits;   // L; 0 means no patch region
  std::uint32_t stored_bits;  // memorized prefix of the patch
  Bytes stored_prefix;        // ceil(stored_bits / 8) bytes

  /// -(L - stored) ln 2 when `output` agrees with the stored prefix, -inf
  /// otherwise.
  double log_probability_at_patch(std::span<const std::uint8_t> output) const;
};

/// Explicit construction. The prefix is the first `stored_bits` bits of z.
Plm make_capacity_learner(std::uint64_t budget_bits, const Plm& base_rule,
                          const std::string& patch_input, std::span<const std::uint8_t> z,
                          std::uint32_t stored_bits);

/// Greedy training: the base rule (a table reproducing the base truth) is
/// stored first; whatever budget remains memorizes a prefix of z. A base that
/// already answers z at s* needs no patch storage.
Plm train_capacity_learner(std::uint64_t budget_bits, const PatchedTruth& truth);

/// Bits of budget the base rule consumes under greedy training.
std::uint64_t base_rule_bits(const ProbabilisticTruth& base);

CapacityLearner decode_capacity_learner(const Plm& h);

/// log P_h(output | s), in nats.
double log_output_probability(const Plm& h, std::string_view s,
                              std::span<const std::uint8_t> output);

/// H_Distort at s* = -ln P_h(z | s*).
HallucinationReport measure_pumping(const Plm& learner, const PatchedTruth& truth,
                                    double tau = kDefaultDistortTau);

/// Smallest patch length in bits that violates tau for a learner whose
/// patch storage holds `slack_bits`.
std::uint64_t pumping_onset_bits(std::uint64_t slack_bits, double tau = kDefaultDistortTau);

struct PumpingPoint {
  std::uint64_t patch_bits;
  std::uint64_t stored_bits;
  double h_distort;
};

/// (L_bits, stored_bits, H_Distort) rows.
void write_pumping_curve_csv(std::ostream& os, std::span<const PumpingPoint> points);

}  // namespace hallab::pumping
