// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hallab {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(std::span<const std::uint8_t> b);

/// Big-endian writer used by every descriptor payload.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  /// u32 length prefix followed by the raw bytes.
  void str(std::string_view s);
  void blob(std::span<const std::uint8_t> b);
  void raw(std::span<const std::uint8_t> b);

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// Bounds-checked reader; any overrun throws ErrorCode::kDecode.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  Bytes blob();
  std::span<const std::uint8_t> raw(std::size_t n);

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }
  /// Throws unless the whole input was consumed.
  void expect_done(std::string_view what) const;

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> data);
std::string hex64(std::uint64_t v);

}  // namespace hallab
