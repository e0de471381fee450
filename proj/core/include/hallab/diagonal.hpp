// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Adversarial truth along the model/input diagonal.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hallab/enumeration.hpp"
#include "hallab/metrics.hpp"
#include "hallab/plm.hpp"

namespace hallab::diagonal {

/// Models h_0..h_{M-1} paired with distinct inputs s_0..s_{M-1}. All models
/// share one output space; epsilon must be below 1/|space|.
class DiagonalScenario {
 public:
  /// Inputs default to "s#<i>"; epsilon defaults to half of 1/|space|.
  DiagonalScenario(std::vector<Plm> models, std::vector<std::string> inputs = {},
                   std::optional<double> epsilon = std::nullopt);

  /// Cell i holds the i-th quantized distribution of the enumeration, placed
  /// at input "s#<i>". Covers the first `cells` members (all when nullopt).
  static DiagonalScenario from_enumeration(const OutputSpace& space, std::uint32_t q,
                                           std::optional<std::uint64_t> cells = std::nullopt,
                                           std::uint64_t cap = kDefaultEnumerationCap);

  const std::vector<Plm>& models() const { return models_; }
  const std::vector<std::string>& inputs() const { return inputs_; }
  const OutputSpace& space() const { return space_; }
  double epsilon() const { return epsilon_; }
  std::size_t size() const { return models_.size(); }

 private:
  // Trusted: every model is known to use `space`.
  DiagonalScenario(std::vector<Plm> models, std::vector<std::string> inputs, OutputSpace space);

  std::vector<Plm> models_;
  std::vector<std::string> inputs_;
  OutputSpace space_;
  double epsilon_;
};

std::string diagonal_input(std::size_t i);

/// f_R(s_i) = space minus h_i's argmax on s_i; every other input maps to the
/// full space. Throws kAmbiguity on duplicate diagonal inputs.
RelationalTruth build_adversarial_truth(const DiagonalScenario& scn);

/// One stray report per diagonal cell, thresholded at epsilon.
std::vector<HallucinationReport> verify_diagonal(const DiagonalScenario& scn,
                                                 const RelationalTruth& truth);

/// Rows = models, columns = inputs; cells hold H_Stray, diagonal cells are
/// prefixed with '*'.
void write_diagonal_matrix_csv(std::ostream& os, const DiagonalScenario& scn,
                               const RelationalTruth& truth);

}  // namespace hallab::diagonal
