// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Per-kind evaluators behind eval_plm. Each receives the framed payload.
#pragma once

#include <span>
#include <string_view>

#include "hallab/plm.hpp"

namespace hallab::detail {

Dist eval_tabular(std::span<const std::uint8_t> payload, std::string_view s);
OutputSpace tabular_space(std::span<const std::uint8_t> payload);

Dist eval_budget_simulator(std::span<const std::uint8_t> payload, std::string_view s);
OutputSpace budget_simulator_space();

Dist eval_capacity_learner(std::span<const std::uint8_t> payload, std::string_view s);
OutputSpace capacity_learner_space(std::span<const std::uint8_t> payload);
double capacity_learner_probability(std::span<const std::uint8_t> payload,
                                    std::string_view s,
                                    std::span<const std::uint8_t> output);

Dist eval_clm_snapshot(std::span<const std::uint8_t> payload, std::string_view s);
OutputSpace clm_snapshot_space(std::span<const std::uint8_t> payload);
double clm_snapshot_probability(std::span<const std::uint8_t> payload,
                                std::string_view s,
                                std::span<const std::uint8_t> output);

OutputSpace oracle_augmented_space(std::span<const std::uint8_t> payload);

}  // namespace hallab::detail
