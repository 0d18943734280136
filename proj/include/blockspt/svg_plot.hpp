#pragma once

// Deterministic SVG line plots. All coordinates are formatted with fixed
// precision via snprintf and the input order is preserved, so identical
// inputs always produce byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockspt {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Renders the series onto one axis pair and writes the SVG to `path`.
/// Requires every series to be nonempty with nondecreasing x values.
inline void emit_plot(const std::vector<PlotSeries>& series,
                      const std::string& path,
                      const std::string& x_label = "x",
                      const std::string& y_label = "y") {
  if (series.empty()) throw std::invalid_argument("emit_plot: no series");
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  bool first = true;
  for (const PlotSeries& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size()) {
      throw std::invalid_argument("emit_plot: series '" + s.name +
                                  "' empty or length mismatch");
    }
    for (std::size_t i = 0; i + 1 < s.x.size(); ++i) {
      if (!(s.x[i] <= s.x[i + 1])) {
        throw std::invalid_argument("emit_plot: series '" + s.name +
                                    "' has non-monotone x");
      }
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        throw std::invalid_argument("emit_plot: non-finite data in '" + s.name + "'");
      }
      if (first) {
        x_lo = x_hi = s.x[i];
        y_lo = y_hi = s.y[i];
        first = false;
      } else {
        x_lo = std::min(x_lo, s.x[i]);
        x_hi = std::max(x_hi, s.x[i]);
        y_lo = std::min(y_lo, s.y[i]);
        y_hi = std::max(y_hi, s.y[i]);
      }
    }
  }
  if (x_hi - x_lo <= 0) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi - y_lo <= 0) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }

  constexpr double W = 800, H = 560;
  constexpr double ML = 70, MR = 160, MT = 30, MB = 55;
  const double pw = W - ML - MR, ph = H - MT - MB;
  const auto px = [&](double x) { return ML + (x - x_lo) / (x_hi - x_lo) * pw; };
  const auto py = [&](double y) { return MT + (y_hi - y) / (y_hi - y_lo) * ph; };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  constexpr int kPaletteSize = 8;

  std::string svg;
  svg.reserve(1 << 16);
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"560\" "
         "viewBox=\"0 0 800 560\">\n";
  svg += "<rect width=\"800\" height=\"560\" fill=\"white\"/>\n";
  // Axes box.
  svg += "<rect x=\"" + detail::fmt2(ML) + "\" y=\"" + detail::fmt2(MT) +
         "\" width=\"" + detail::fmt2(pw) + "\" height=\"" + detail::fmt2(ph) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // Ticks and grid (5 intervals each way).
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 5.0;
    const double yv = y_lo + (y_hi - y_lo) * t / 5.0;
    const double gx = px(xv), gy = py(yv);
    svg += "<line x1=\"" + detail::fmt2(gx) + "\" y1=\"" + detail::fmt2(MT) +
           "\" x2=\"" + detail::fmt2(gx) + "\" y2=\"" + detail::fmt2(MT + ph) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg += "<line x1=\"" + detail::fmt2(ML) + "\" y1=\"" + detail::fmt2(gy) +
           "\" x2=\"" + detail::fmt2(ML + pw) + "\" y2=\"" + detail::fmt2(gy) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg += "<text x=\"" + detail::fmt2(gx) + "\" y=\"" + detail::fmt2(MT + ph + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + detail::fmt4(xv) +
           "</text>\n";
    svg += "<text x=\"" + detail::fmt2(ML - 6) + "\" y=\"" + detail::fmt2(gy + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + detail::fmt4(yv) +
           "</text>\n";
  }
  svg += "<text x=\"" + detail::fmt2(ML + pw / 2) + "\" y=\"" +
         detail::fmt2(H - 12) + "\" font-size=\"13\" text-anchor=\"middle\">" +
         x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"" + detail::fmt2(MT + ph / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::fmt2(MT + ph / 2) + ")\">" + y_label + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    const PlotSeries& ser = series[s];
    if (ser.x.size() > 1) {
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += color;
      svg += "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        if (i) svg += ' ';
        svg += detail::fmt2(px(ser.x[i])) + "," + detail::fmt2(py(ser.y[i]));
      }
      svg += "\"/>\n";
    }
    // Markers keep single-point series visible and aid reading dense curves.
    const std::size_t stride = std::max<std::size_t>(1, ser.x.size() / 40);
    for (std::size_t i = 0; i < ser.x.size(); i += stride) {
      svg += "<circle cx=\"" + detail::fmt2(px(ser.x[i])) + "\" cy=\"" +
             detail::fmt2(py(ser.y[i])) + "\" r=\"2.5\" fill=\"";
      svg += color;
      svg += "\"/>\n";
    }
    const double ly = MT + 16 + 18 * static_cast<double>(s);
    svg += "<line x1=\"" + detail::fmt2(ML + pw + 10) + "\" y1=\"" +
           detail::fmt2(ly - 4) + "\" x2=\"" + detail::fmt2(ML + pw + 34) +
           "\" y2=\"" + detail::fmt2(ly - 4) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + detail::fmt2(ML + pw + 40) + "\" y=\"" +
           detail::fmt2(ly) + "\" font-size=\"12\">" + ser.name + "</text>\n";
  }
  svg += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plot: cannot open " + path);
  out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
  if (!out) throw std::runtime_error("emit_plot: write failed for " + path);
}

}  // namespace blockspt
