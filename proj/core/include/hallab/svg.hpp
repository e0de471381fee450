// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal deterministic SVG charts for the figure analogues.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hallab::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Marker {
  double x;
  std::string label;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::optional<Marker> marker;  // vertical line
};

struct BarGroup {
  std::string label;
  std::vector<double> values;  // one per category
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<BarGroup> groups;
};

std::string render(const LineChart& chart);
std::string render(const BarChart& chart);

/// Escapes &, <, >, and quotes for text nodes and attributes.
std::string escape(std::string_view text);

}  // namespace hallab::svg
