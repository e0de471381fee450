// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "demos.hpp"

namespace lab {

const std::map<std::string, DemoFactory, std::less<>>& demo_registry() {
  static const std::map<std::string, DemoFactory, std::less<>> reg{
      {"diagonal", demos::diagonal},   {"halting", demos::halting},
      {"pumping", demos::pumping},     {"oracle", demos::oracle},
      {"clm-cost", demos::clm_cost},   {"hybrid", demos::hybrid},
      {"neuro-game", demos::neuro_game}, {"cca", demos::cca},
  };
  return reg;
}

}  // namespace lab
