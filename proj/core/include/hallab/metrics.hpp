// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hallab/plm.hpp"

namespace hallab {

enum class MetricKind { kStray, kDistort };

std::string_view to_string(MetricKind kind);

/// Default distortion tolerance; strictly below ln 2.
inline constexpr double kDefaultDistortTau = 0.6;

struct HallucinationReport {
  std::string input;
  MetricKind metric_kind;
  double value;  // may be +infinity for kDistort
  double threshold;
  bool violated;  // value > threshold

  static HallucinationReport make(std::string input, MetricKind kind, double value,
                                  double threshold);
};

/// D_KL(p || q) in nats. 0 ln(0/q) = 0; p_i > 0 with q_i = 0 gives +infinity.
double kl_divergence(const Dist& p, const Dist& q);

/// Mass outside the relational image at s.
double h_stray(const Plm& h, const RelationalTruth& truth, std::string_view s);
double h_stray(const Dist& model_dist, const RelationalTruth& truth, std::string_view s);

/// KL from the probabilistic truth at s to the model's distribution.
double h_distort(const Plm& h, const ProbabilisticTruth& truth, std::string_view s);

/// Shortest round-trip decimal for a real; "INF" for +infinity.
std::string format_real(double v);

inline constexpr std::string_view kReportCsvHeader = "input,metric_kind,value,threshold,violated";

/// Quotes a CSV field when it contains a comma, quote, or newline.
std::string csv_field(std::string_view s);
std::string to_csv_row(const HallucinationReport& r);
void write_reports_csv(std::ostream& os, std::span<const HallucinationReport> reports);

}  // namespace hallab
