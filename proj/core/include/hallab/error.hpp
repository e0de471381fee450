// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hallab {

enum class ErrorCode {
  kDecode,
  kDomain,
  kDimension,
  kEnumerationTooLarge,
  kAmbiguity,
  kIntegrity,
  kGeneration,
  kNumeric,
  kConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library. The code tells callers
/// which contract was broken; the message carries the details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace hallab
