// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/bytes.hpp"

#include <bit>
#include <limits>

#include "hallab/error.hpp"

namespace hallab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDecode: return "decode";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kEnumerationTooLarge: return "enumeration-too-large";
    case ErrorCode::kAmbiguity: return "ambiguity";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kGeneration: return "generation";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(std::span<const std::uint8_t> b) {
  return std::string(b.begin(), b.end());
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kDomain, "string too long for descriptor");
  }
  u32(static_cast<std::uint32_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::blob(std::span<const std::uint8_t> b) {
  if (b.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kDomain, "blob too long for descriptor");
  }
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

void ByteWriter::raw(std::span<const std::uint8_t> b) {
  out_.insert(out_.end(), b.begin(), b.end());
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    fail(ErrorCode::kDecode, "descriptor truncated: need " + std::to_string(n) +
                                 " bytes, have " + std::to_string(remaining()));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return in_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const auto n = u32();
  auto r = raw(n);
  return std::string(r.begin(), r.end());
}

Bytes ByteReader::blob() {
  const auto n = u32();
  auto r = raw(n);
  return Bytes(r.begin(), r.end());
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  need(n);
  auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_done(std::string_view what) const {
  if (!done()) {
    fail(ErrorCode::kDecode, std::string(what) + ": " +
                                 std::to_string(remaining()) +
                                 " trailing bytes");
  }
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace hallab
