// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// gtest helpers shared by the unit tests.
#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include <gtest/gtest.h>

#include "hallab/error.hpp"
#include "hallab/plm.hpp"
#include "hallab/random.hpp"
#include "oracles.hpp"

namespace hallab {

// gtest picks this up through ADL for failure messages.
inline void PrintTo(const Dist& d, std::ostream* os) {
  *os << "Dist{";
  for (std::size_t i = 0; i < d.size(); ++i) *os << (i ? ", " : "") << d[i];
  *os << "}";
}

}  // namespace hallab

namespace hallab::testing {

/// Code of the hallab::Error thrown by f; records a failure when none is.
inline ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no hallab::Error thrown";
  return ErrorCode::kConfig;
}

}  // namespace hallab::testing
