// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "hallab/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hallab/error.hpp"

namespace hallab::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                              "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi == lo) hi = lo + 1.0;
  }
};

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
     << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Range& y, const std::string& y_label) {
  const double x0 = kLeft, y0 = kHeight - kBottom, x1 = kWidth - kRight;
  os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\""
     << num(y0) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(x0)
     << "\" y2=\"" << num(y0) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y0 - (y0 - kTop) * i / 4.0;
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py + 4)
       << "\" text-anchor=\"end\" font-size=\"11\">" << tick(v) << "</text>\n";
  }
  os << "<text x=\"16\" y=\"" << num((kTop + y0) / 2) << "\" font-size=\"12\" transform=\"rotate(-90 16 "
     << num((kTop + y0) / 2) << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
}

}  // namespace

std::string escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string render(const LineChart& chart) {
  Range xr, yr;
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) fail(ErrorCode::kDimension, "series x and y lengths differ");
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  if (chart.marker) xr.add(chart.marker->x);
  xr.settle();
  yr.settle();
  const double y0 = kHeight - kBottom, x1 = kWidth - kRight;
  auto px = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - kLeft); };
  auto py = [&](double v) { return y0 - (v - yr.lo) / (yr.hi - yr.lo) * (y0 - kTop); };

  std::ostringstream os;
  header(os, chart.title);
  axes(os, yr, chart.y_label);
  for (int i = 0; i <= 4; ++i) {
    const double v = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    os << "<text x=\"" << num(px(v)) << "\" y=\"" << num(y0 + 16)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << tick(v) << "</text>\n";
  }
  os << "<text x=\"" << num((kLeft + x1) / 2) << "\" y=\"" << num(kHeight - 20)
     << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(chart.x_label) << "</text>\n";
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = kPalette[k % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
    }
    os << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(k);
    os << "<text x=\"" << num(kLeft + 10) << "\" y=\"" << num(ly + 4) << "\" font-size=\"11\" fill=\""
       << color << "\">" << escape(s.label) << "</text>\n";
  }
  if (chart.marker) {
    const double mx = px(chart.marker->x);
    os << "<line x1=\"" << num(mx) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(mx)
       << "\" y2=\"" << num(y0) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << num(mx + 4) << "\" y=\"" << num(y0 - 6) << "\" font-size=\"11\">"
       << escape(chart.marker->label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render(const BarChart& chart) {
  Range yr;
  yr.add(0.0);
  for (const auto& g : chart.groups) {
    if (g.values.size() != chart.categories.size()) {
      fail(ErrorCode::kDimension, "bar group size does not match categories");
    }
    for (double v : g.values) yr.add(v);
  }
  yr.settle();
  const double y0 = kHeight - kBottom, x1 = kWidth - kRight;
  auto py = [&](double v) { return y0 - (v - yr.lo) / (yr.hi - yr.lo) * (y0 - kTop); };

  std::ostringstream os;
  header(os, chart.title);
  axes(os, yr, chart.y_label);
  const auto ncat = std::max<std::size_t>(chart.categories.size(), 1);
  const auto ngrp = std::max<std::size_t>(chart.groups.size(), 1);
  const double slot = (x1 - kLeft) / static_cast<double>(ncat);
  const double bar = slot * 0.8 / static_cast<double>(ngrp);
  for (std::size_t c = 0; c < chart.categories.size(); ++c) {
    const double sx = kLeft + slot * static_cast<double>(c) + slot * 0.1;
    for (std::size_t g = 0; g < chart.groups.size(); ++g) {
      const double v = chart.groups[g].values[c];
      const double top = py(std::isfinite(v) ? v : 0.0);
      os << "<rect x=\"" << num(sx + bar * static_cast<double>(g)) << "\" y=\"" << num(top)
         << "\" width=\"" << num(bar) << "\" height=\"" << num(y0 - top) << "\" fill=\""
         << kPalette[g % kPalette.size()] << "\"/>\n";
    }
    os << "<text x=\"" << num(sx + slot * 0.4) << "\" y=\"" << num(y0 + 16)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(chart.categories[c])
       << "</text>\n";
  }
  for (std::size_t g = 0; g < chart.groups.size(); ++g) {
    os << "<text x=\"" << num(x1 - 120) << "\" y=\"" << num(kTop + 14.0 * static_cast<double>(g))
       << "\" font-size=\"11\" fill=\"" << kPalette[g % kPalette.size()] << "\">"
       << escape(chart.groups[g].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hallab::svg
