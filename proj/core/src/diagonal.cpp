// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/diagonal.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "hallab/error.hpp"

namespace hallab::diagonal {

std::string diagonal_input(std::size_t i) { return "s#" + std::to_string(i); }

namespace {

OutputSpace common_space(const std::vector<Plm>& models) {
  if (models.empty()) fail(ErrorCode::kDomain, "diagonal scenario needs at least one model");
  auto space = plm_output_space(models.front());
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (!(plm_output_space(models[i]) == space)) {
      fail(ErrorCode::kDimension, "diagonal models must share one output space");
    }
  }
  return space;
}

}  // namespace

DiagonalScenario::DiagonalScenario(std::vector<Plm> models, std::vector<std::string> inputs,
                                   std::optional<double> epsilon)
    : models_(std::move(models)), inputs_(std::move(inputs)), space_(common_space(models_)) {
  if (inputs_.empty()) {
    inputs_.reserve(models_.size());
    for (std::size_t i = 0; i < models_.size(); ++i) inputs_.push_back(diagonal_input(i));
  }
  if (inputs_.size() != models_.size()) {
    fail(ErrorCode::kDimension, "diagonal scenario needs one input per model");
  }
  const double bound = 1.0 / static_cast<double>(space_.size());
  epsilon_ = epsilon.value_or(bound / 2.0);
  if (!(epsilon_ < bound)) fail(ErrorCode::kDomain, "epsilon must be below 1/|space|");
}

DiagonalScenario DiagonalScenario::from_enumeration(const OutputSpace& space, std::uint32_t q,
                                                    std::optional<std::uint64_t> cells,
                                                    std::uint64_t cap) {
  const PlmEnumeration family(space, {"s#0"}, q, cap);
  const auto m = cells.value_or(family.size());
  if (m == 0 || m > family.size()) {
    fail(ErrorCode::kDomain, "requested " + std::to_string(m) + " cells from a family of " +
                                 std::to_string(family.size()));
  }
  std::vector<Plm> models;
  std::vector<std::string> inputs;
  models.reserve(m);
  inputs.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    inputs.push_back(diagonal_input(i));
    models.push_back(make_tabular(space, {{inputs.back(), family.cell(i)}}));
  }
  return DiagonalScenario(std::move(models), std::move(inputs), space);
}

DiagonalScenario::DiagonalScenario(std::vector<Plm> models, std::vector<std::string> inputs,
                                   OutputSpace space)
    : models_(std::move(models)), inputs_(std::move(inputs)), space_(std::move(space)),
      epsilon_(0.5 / static_cast<double>(space_.size())) {}

RelationalTruth build_adversarial_truth(const DiagonalScenario& scn) {
  std::set<std::string_view> seen;
  for (const auto& s : scn.inputs()) {
    if (!seen.insert(s).second) {
      fail(ErrorCode::kAmbiguity, "diagonal input '" + s + "' appears more than once");
    }
  }
  RelationalTruth truth(scn.space());
  truth.default_to_full_space();
  const auto n = scn.space().size();
  for (std::size_t i = 0; i < scn.size(); ++i) {
    const auto top = argmax_output(eval_plm(scn.models()[i], scn.inputs()[i]));
    std::vector<bool> image(n, true);
    image[top.index] = false;
    truth.set_mask(scn.inputs()[i], std::move(image));
  }
  return truth;
}

std::vector<HallucinationReport> verify_diagonal(const DiagonalScenario& scn,
                                                 const RelationalTruth& truth) {
  std::vector<HallucinationReport> out;
  out.reserve(scn.size());
  for (std::size_t i = 0; i < scn.size(); ++i) {
    const auto& s = scn.inputs()[i];
    out.push_back(HallucinationReport::make(s, MetricKind::kStray,
                                            h_stray(scn.models()[i], truth, s),
                                            scn.epsilon()));
  }
  return out;
}

void write_diagonal_matrix_csv(std::ostream& os, const DiagonalScenario& scn,
                               const RelationalTruth& truth) {
  os << "model";
  for (const auto& s : scn.inputs()) os << ',' << csv_field(s);
  os << '\n';
  for (std::size_t i = 0; i < scn.size(); ++i) {
    os << 'h' << i;
    const auto& h = scn.models()[i];
    for (std::size_t j = 0; j < scn.size(); ++j) {
      os << ',' << (i == j ? "*" : "") << format_real(h_stray(h, truth, scn.inputs()[j]));
    }
    os << '\n';
  }
}

}  // namespace hallab::diagonal
