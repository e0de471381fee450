// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/pumping.hpp"

#include <zlib.h>

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "hallab/clm.hpp"
#include "hallab/error.hpp"
#include "kinds.hpp"

namespace hallab::pumping {

Bytes ZlibCompressor::compress(std::span<const std::uint8_t> in) const {
  uLongf out_len = compressBound(static_cast<uLong>(in.size()));
  Bytes out(out_len);
  const int rc = compress2(out.data(), &out_len, in.data(), static_cast<uLong>(in.size()),
                           Z_BEST_COMPRESSION);
  if (rc != Z_OK) fail(ErrorCode::kIntegrity, "zlib compress failed: " + std::to_string(rc));
  out.resize(out_len);
  return out;
}

Bytes ZlibCompressor::decompress(std::span<const std::uint8_t> in) const {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) fail(ErrorCode::kIntegrity, "zlib inflateInit failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  Bytes out;
  std::uint8_t chunk[16384];
  int rc = Z_OK;
  do {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      fail(ErrorCode::kIntegrity, "zlib inflate failed: " + std::to_string(rc));
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      fail(ErrorCode::kIntegrity, "zlib stream truncated");
    }
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

const Compressor& default_compressor() {
  static const ZlibCompressor c;
  return c;
}

std::uint64_t k_hat(std::span<const std::uint8_t> x, const Compressor& c) {
  const auto packed = c.compress(x);
  const auto back = c.decompress(packed);
  if (!std::equal(back.begin(), back.end(), x.begin(), x.end())) {
    fail(ErrorCode::kIntegrity, c.name() + " round trip mismatch");
  }
  return 8ULL * packed.size();
}

std::uint64_t k_hat_conditional(std::span<const std::uint8_t> x,
                                std::span<const std::uint8_t> context, const Compressor& c) {
  Bytes joined(context.begin(), context.end());
  joined.insert(joined.end(), x.begin(), x.end());
  const auto joint = k_hat(joined, c);
  const auto ctx = k_hat(context, c);
  return joint > ctx ? joint - ctx : 0;
}

namespace {

Bytes uniform_bytes(std::mt19937_64& engine, std::size_t length_bytes) {
  Bytes z(length_bytes);
  for (std::size_t i = 0; i < length_bytes; i += 8) {
    auto word = engine();
    for (std::size_t b = i; b < std::min(i + 8, length_bytes); ++b) {
      z[b] = static_cast<std::uint8_t>(word & 0xff);
      word >>= 8;
    }
  }
  return z;
}

}  // namespace

Bytes rand_incompressible(std::size_t length_bytes, std::uint64_t seed, const Compressor& c) {
  if (length_bytes < 16) fail(ErrorCode::kDomain, "incompressible strings need >= 16 bytes");
  std::mt19937_64 engine(seed);
  const double need = kIncompressibleRatio * 8.0 * static_cast<double>(length_bytes);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    auto z = uniform_bytes(engine, length_bytes);
    if (static_cast<double>(k_hat(z, c)) >= need) return z;
  }
  fail(ErrorCode::kGeneration, "no incompressible candidate after " +
                                   std::to_string(kMaxRejections) + " draws with " + c.name());
}

Bytes rand_patch(std::size_t length_bytes, std::uint64_t seed, const Compressor& c) {
  if (length_bytes == 0) fail(ErrorCode::kDomain, "patch must be non-empty");
  if (length_bytes >= 16) return rand_incompressible(length_bytes, seed, c);
  std::mt19937_64 engine(seed);
  return uniform_bytes(engine, length_bytes);
}

PatchedTruth::PatchedTruth(ProbabilisticTruth base, std::string patch_input, Bytes patch_value,
                           const Compressor& c)
    : base_(std::move(base)), patch_input_(std::move(patch_input)),
      patch_value_(std::move(patch_value)) {
  if (patch_value_.empty()) fail(ErrorCode::kDomain, "patch value must be non-empty");
  if (base_.contains(patch_input_)) {
    const auto& d = base_.at(patch_input_);
    const auto top = argmax_output(d);
    base_agrees_ = top.probability == 1.0 &&
                   to_bytes(base_.space().symbol(top.index)) == patch_value_;
  }
  const auto base_bytes = base_.serialize();
  base_k_hat_ = k_hat(base_bytes, c);
  patch_k_hat_ = k_hat(patch_value_, c);
  ByteWriter w;
  w.raw(base_bytes);
  w.str(patch_input_);
  w.blob(patch_value_);
  patched_k_hat_ = k_hat(w.bytes(), c);
}

const Dist& PatchedTruth::at(std::string_view s) const {
  if (s == patch_input_) {
    fail(ErrorCode::kDomain, "patched input requires the byte string z, not a base symbol");
  }
  return base_.at(s);
}

PatchedTruth build_patched_truth(ProbabilisticTruth base, std::string patch_input, Bytes z) {
  return PatchedTruth(std::move(base), std::move(patch_input), std::move(z));
}

namespace {

bool prefix_matches(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                    std::uint32_t bits) {
  const std::uint32_t full = bits / 8;
  for (std::uint32_t i = 0; i < full; ++i) {
    if (a[i] != b[i]) return false;
  }
  const std::uint32_t rest = bits % 8;
  if (rest == 0) return true;
  const auto mask = static_cast<std::uint8_t>(0xff << (8 - rest));
  return (a[full] & mask) == (b[full] & mask);
}

CapacityLearner decode_learner(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  CapacityLearner out{0, Plm(Bytes{}), {}, 0, 0, {}};
  out.budget_bits = r.u64();
  out.base_rule = Plm(r.blob());
  out.patch_input = r.str();
  out.patch_bits = r.u32();
  out.stored_bits = r.u32();
  out.stored_prefix = r.blob();
  r.expect_done("capacity learner payload");
  if (out.base_rule.kind() != PlmKind::kTabular) {
    fail(ErrorCode::kDecode, "capacity learner base rule must be tabular");
  }
  if (out.stored_bits > out.patch_bits || out.patch_bits % 8 != 0 ||
      out.stored_prefix.size() != (out.stored_bits + 7) / 8) {
    fail(ErrorCode::kDecode, "inconsistent capacity learner patch fields");
  }
  return out;
}

}  // namespace

double CapacityLearner::log_probability_at_patch(std::span<const std::uint8_t> output) const {
  if (8ULL * output.size() != patch_bits) return -std::numeric_limits<double>::infinity();
  if (!prefix_matches(output, stored_prefix, stored_bits)) {
    return -std::numeric_limits<double>::infinity();
  }
  return -static_cast<double>(patch_bits - stored_bits) * std::log(2.0);
}

Plm make_capacity_learner(std::uint64_t budget_bits, const Plm& base_rule,
                          const std::string& patch_input, std::span<const std::uint8_t> z,
                          std::uint32_t stored_bits) {
  const auto bits = 8ULL * z.size();
  if (bits > std::numeric_limits<std::uint32_t>::max()) fail(ErrorCode::kDomain, "patch too long");
  if (stored_bits > bits) fail(ErrorCode::kDomain, "cannot store more bits than the patch has");
  if (base_rule.kind() != PlmKind::kTabular) fail(ErrorCode::kDomain, "base rule must be tabular");
  Bytes prefix(z.begin(), z.begin() + (stored_bits + 7) / 8);
  if (stored_bits % 8 != 0) {
    prefix.back() &= static_cast<std::uint8_t>(0xff << (8 - stored_bits % 8));
  }
  ByteWriter w;
  w.u64(budget_bits);
  w.blob(base_rule.descriptor());
  w.str(patch_input);
  w.u32(static_cast<std::uint32_t>(bits));
  w.u32(stored_bits);
  w.blob(prefix);
  return Plm::frame(PlmKind::kCapacityLearner, w.bytes());
}

namespace {

Plm base_rule_for(const ProbabilisticTruth& base) {
  std::map<std::string, Dist> table(base.entries().begin(), base.entries().end());
  return make_tabular(base.space(), table);
}

}  // namespace

std::uint64_t base_rule_bits(const ProbabilisticTruth& base) {
  return capacity_of(base_rule_for(base));
}

Plm train_capacity_learner(std::uint64_t budget_bits, const PatchedTruth& truth) {
  const auto rule = base_rule_for(truth.base());
  const auto used = capacity_of(rule);
  if (used > budget_bits) {
    fail(ErrorCode::kDomain, "budget of " + std::to_string(budget_bits) +
                                 " bits cannot hold the base rule (" + std::to_string(used) +
                                 " bits)");
  }
  if (truth.base_agrees()) {
    return make_capacity_learner(budget_bits, rule, truth.patch_input(), {}, 0);
  }
  const auto slack = budget_bits - used;
  const auto stored = static_cast<std::uint32_t>(std::min<std::uint64_t>(slack, truth.patch_bits()));
  return make_capacity_learner(budget_bits, rule, truth.patch_input(), truth.patch_value(), stored);
}

CapacityLearner decode_capacity_learner(const Plm& h) {
  if (h.kind() != PlmKind::kCapacityLearner) fail(ErrorCode::kDecode, "not a capacity learner");
  return decode_learner(h.payload());
}

double log_output_probability(const Plm& h, std::string_view s,
                              std::span<const std::uint8_t> output) {
  if (h.kind() == PlmKind::kCapacityLearner) {
    const auto learner = decode_capacity_learner(h);
    if (learner.patch_bits > 0 && s == learner.patch_input) {
      return learner.log_probability_at_patch(output);
    }
  } else if (h.kind() == PlmKind::kClmSnapshot && !clm::snapshot_fact(h, s)) {
    // Unstored inputs defer to the embedded base model (log domain, so long
    // patches do not underflow).
    if (auto base = clm::snapshot_base_model(h)) return log_output_probability(*base, s, output);
  }
  return std::log(output_probability(h, s, output));
}

HallucinationReport measure_pumping(const Plm& learner, const PatchedTruth& truth, double tau) {
  const double lp = log_output_probability(learner, truth.patch_input(), truth.patch_value());
  const double d = lp == 0.0 ? 0.0 : -lp;
  return HallucinationReport::make(truth.patch_input(), MetricKind::kDistort, d, tau);
}

std::uint64_t pumping_onset_bits(std::uint64_t slack_bits, double tau) {
  if (!(tau >= 0.0)) fail(ErrorCode::kDomain, "tau must be non-negative");
  return slack_bits + static_cast<std::uint64_t>(std::floor(tau / std::log(2.0))) + 1;
}

void write_pumping_curve_csv(std::ostream& os, std::span<const PumpingPoint> points) {
  os << "L_bits,stored_bits,H_Distort\n";
  for (const auto& p : points) {
    os << p.patch_bits << ',' << p.stored_bits << ',' << format_real(p.h_distort) << '\n';
  }
}

}  // namespace hallab::pumping

namespace hallab::detail {

Dist eval_capacity_learner(std::span<const std::uint8_t> payload, std::string_view s) {
  const auto learner = pumping::decode_learner(payload);
  if (learner.patch_bits == 0 || s != learner.patch_input) return eval_plm(learner.base_rule, s);
  if (learner.patch_bits > 16) {
    fail(ErrorCode::kDomain, "patch output space of 2^" + std::to_string(learner.patch_bits) +
                                 " strings is not enumerable; use log_output_probability");
  }
  // Outputs indexed by their big-endian bit value.
  const std::size_t n = std::size_t{1} << learner.patch_bits;
  std::vector<double> p(n, 0.0);
  const auto bytes = learner.patch_bits / 8;
  Bytes candidate(bytes);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::uint32_t b = 0; b < bytes; ++b) {
      candidate[b] = static_cast<std::uint8_t>(v >> (8 * (bytes - 1 - b)));
    }
    const double lp = learner.log_probability_at_patch(candidate);
    p[v] = std::isinf(lp) ? 0.0 : std::exp(lp);
  }
  return Dist(std::move(p));
}

OutputSpace capacity_learner_space(std::span<const std::uint8_t> payload) {
  const auto learner = pumping::decode_learner(payload);
  return plm_output_space(learner.base_rule);
}

double capacity_learner_probability(std::span<const std::uint8_t> payload, std::string_view s,
                                    std::span<const std::uint8_t> output) {
  const auto learner = pumping::decode_learner(payload);
  if (learner.patch_bits > 0 && s == learner.patch_input) {
    return std::exp(learner.log_probability_at_patch(output));
  }
  return output_probability(learner.base_rule, s, output);
}

}  // namespace hallab::detail
