// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "hallab/error.hpp"

namespace hallab {

std::string_view to_string(MetricKind kind) {
  return kind == MetricKind::kStray ? "Stray" : "Distort";
}

HallucinationReport HallucinationReport::make(std::string input, MetricKind kind,
                                              double value, double threshold) {
  return HallucinationReport{std::move(input), kind, value, threshold, value > threshold};
}

double kl_divergence(const Dist& p, const Dist& q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::kDimension, "kl_divergence over spaces of size " +
                                    std::to_string(p.size()) + " and " +
                                    std::to_string(q.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    sum += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative residue for near-identical inputs.
  return sum < 0.0 ? 0.0 : sum;
}

double h_stray(const Dist& model_dist, const RelationalTruth& truth, std::string_view s) {
  if (model_dist.size() != truth.space().size()) {
    fail(ErrorCode::kDimension, "model and truth output spaces differ");
  }
  const auto* mask = truth.find_mask(s);
  if (!mask) return 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < model_dist.size(); ++i) {
    if (!(*mask)[i]) mass += model_dist[i];
  }
  return std::min(mass, 1.0);
}

double h_stray(const Plm& h, const RelationalTruth& truth, std::string_view s) {
  if (!truth.contains(s)) {
    fail(ErrorCode::kDomain, "input '" + std::string(s) + "' outside relational truth domain");
  }
  return h_stray(eval_plm(h, s), truth, s);
}

double h_distort(const Plm& h, const ProbabilisticTruth& truth, std::string_view s) {
  const auto& target = truth.at(s);
  return kl_divergence(target, eval_plm(h, s));
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "INF" : "-INF";
  if (std::isnan(v)) return "NAN";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string to_csv_row(const HallucinationReport& r) {
  std::string out = csv_field(r.input);
  out += ',';
  out += to_string(r.metric_kind);
  out += ',';
  out += format_real(r.value);
  out += ',';
  out += format_real(r.threshold);
  out += ',';
  out += r.violated ? "true" : "false";
  return out;
}

void write_reports_csv(std::ostream& os, std::span<const HallucinationReport> reports) {
  os << kReportCsvHeader << '\n';
  for (const auto& r : reports) os << to_csv_row(r) << '\n';
}

}  // namespace hallab
