// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <sstream>
#include <string>

#include "runner.hpp"

namespace lab::demos {

PreparedDemo diagonal(Params& p, std::uint64_t seed);
PreparedDemo halting(Params& p, std::uint64_t seed);
PreparedDemo pumping(Params& p, std::uint64_t seed);
PreparedDemo oracle(Params& p, std::uint64_t seed);
PreparedDemo clm_cost(Params& p, std::uint64_t seed);
PreparedDemo hybrid(Params& p, std::uint64_t seed);
PreparedDemo neuro_game(Params& p, std::uint64_t seed);
PreparedDemo cca(Params& p, std::uint64_t seed);

/// Renders whatever `write(os)` emits into a string.
template <class F>
std::string render(F&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

}  // namespace lab::demos
