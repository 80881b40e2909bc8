#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ncxfer/errors.hpp"
#include "ncxfer/report.hpp"

namespace ncxfer {

enum class Panel { Time, Bandwidth, Slowdown };

constexpr std::string_view panel_suffix(Panel p) {
  switch (p) {
    case Panel::Time: return "time";
    case Panel::Bandwidth: return "bw";
    case Panel::Slowdown: return "slowdown";
  }
  return "?";
}

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline constexpr std::array<const char*, 7> kSchemeColors = {
    "#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
};

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;

  double map(double v, double px_lo, double px_hi) const {
    double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return px_lo + t * (px_hi - px_lo);
  }
};

inline Axis make_axis(const std::vector<double>& values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    double t = log ? std::log10(v) : v;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi == lo) hi = lo + 1;
  } else {
    lo = std::min(0.0, lo);
    hi = hi <= lo ? lo + 1.0 : hi * 1.05;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

}  // namespace detail

// Renders one panel as a self-contained SVG document: log-scale message size
// on x, one polyline per scheme. Time and bandwidth use a log y axis, the
// slowdown a linear one.
inline std::string render_panel(const std::vector<ResultRow>& rows, Panel panel) {
  if (rows.empty()) throw EmptyInput("no rows to plot");
  const bool log_y = panel != Panel::Slowdown;
  auto value = [panel](const ResultRow& r) {
    switch (panel) {
      case Panel::Time: return r.mean_time_s;
      case Panel::Bandwidth: return r.bandwidth_Bps;
      case Panel::Slowdown: return r.slowdown;
    }
    return 0.0;
  };

  std::map<SchemeId, std::vector<std::pair<double, double>>> series;
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    const double x = static_cast<double>(r.msg_bytes);
    const double y = value(r);
    if (x <= 0.0 || !std::isfinite(y) || (log_y && y <= 0.0)) continue;
    series[r.scheme].emplace_back(x, y);
    xs.push_back(x);
    ys.push_back(y);
  }
  for (auto& [_, pts] : series) std::sort(pts.begin(), pts.end());

  const double width = 720, height = 460;
  const double left = 80, right = 170, top = 40, bottom = 60;
  const double x0 = left, x1 = width - right, y0 = height - bottom, y1 = top;
  const auto ax = detail::make_axis(xs, true);
  const auto ay = detail::make_axis(ys, log_y);
  const char* title = panel == Panel::Time ? "Time per ping-pong (s)"
                      : panel == Panel::Bandwidth ? "Effective bandwidth (bytes/s)"
                                                  : "Slowdown vs contiguous";

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt2(width) + "\" height=\"" +
         detail::fmt2(height) + "\" viewBox=\"0 0 " + detail::fmt2(width) + " " + detail::fmt2(height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + detail::fmt2((x0 + x1) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         title + "</text>\n";
  svg += "<g class=\"axes\" stroke=\"#444\" fill=\"none\">\n";
  svg += "<rect x=\"" + detail::fmt2(x0) + "\" y=\"" + detail::fmt2(y1) + "\" width=\"" + detail::fmt2(x1 - x0) +
         "\" height=\"" + detail::fmt2(y0 - y1) + "\"/>\n";
  svg += "</g>\n";

  // x ticks at decades
  for (double e = ax.lo; e <= ax.hi + 1e-9; e += 1.0) {
    const double px = ax.map(std::pow(10.0, e), x0, x1);
    svg += "<line x1=\"" + detail::fmt2(px) + "\" y1=\"" + detail::fmt2(y0) + "\" x2=\"" + detail::fmt2(px) +
           "\" y2=\"" + detail::fmt2(y1) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + detail::fmt2(px) + "\" y=\"" + detail::fmt2(y0 + 18) + "\" text-anchor=\"middle\">1e" +
           detail::tick_label(e) + "</text>\n";
  }
  svg += "<text x=\"" + detail::fmt2((x0 + x1) / 2) + "\" y=\"" + detail::fmt2(height - 18) +
         "\" text-anchor=\"middle\">message size (bytes)</text>\n";

  // y ticks
  const int linear_steps = 5;
  const int n_ticks = log_y ? static_cast<int>(ay.hi - ay.lo) : linear_steps;
  for (int i = 0; i <= n_ticks; ++i) {
    const double tv = log_y ? std::pow(10.0, ay.lo + i) : ay.lo + (ay.hi - ay.lo) * i / linear_steps;
    const double py = ay.map(tv, y0, y1);
    const std::string label = log_y ? "1e" + detail::tick_label(ay.lo + i) : detail::tick_label(std::round(tv * 100) / 100);
    svg += "<line x1=\"" + detail::fmt2(x0) + "\" y1=\"" + detail::fmt2(py) + "\" x2=\"" + detail::fmt2(x1) +
           "\" y2=\"" + detail::fmt2(py) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + detail::fmt2(x0 - 6) + "\" y=\"" + detail::fmt2(py + 4) + "\" text-anchor=\"end\">" +
           label + "</text>\n";
  }

  int legend_row = 0;
  for (const auto& [scheme, pts] : series) {
    const char* color = detail::kSchemeColors[static_cast<std::size_t>(scheme) % detail::kSchemeColors.size()];
    std::string points;
    for (const auto& [x, y] : pts) {
      if (!points.empty()) points += ' ';
      points += detail::fmt2(ax.map(x, x0, x1)) + "," + detail::fmt2(ay.map(y, y0, y1));
    }
    svg += "<polyline class=\"series\" data-scheme=\"" + std::string(cli_name(scheme)) + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    const double ly = y1 + 14 + 18 * legend_row++;
    svg += "<line x1=\"" + detail::fmt2(x1 + 12) + "\" y1=\"" + detail::fmt2(ly - 4) + "\" x2=\"" +
           detail::fmt2(x1 + 36) + "\" y2=\"" + detail::fmt2(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + detail::fmt2(x1 + 42) + "\" y=\"" + detail::fmt2(ly) + "\">" +
           std::string(legend_label(scheme)) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// Writes `<prefix>-time.svg`, `<prefix>-bw.svg` and `<prefix>-slowdown.svg`;
// returns the paths written.
inline std::vector<std::string> emit_plots(const std::vector<ResultRow>& rows, const std::string& prefix) {
  if (rows.empty()) throw EmptyInput("no rows to plot");
  std::vector<std::string> paths;
  for (Panel p : {Panel::Time, Panel::Bandwidth, Panel::Slowdown}) {
    std::string path = prefix + "-" + std::string(panel_suffix(p)) + ".svg";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path);
    f << render_panel(rows, p);
    if (!f) throw IoFailure("write failed for " + path);
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace ncxfer
