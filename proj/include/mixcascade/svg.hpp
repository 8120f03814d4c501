#pragma once

// Minimal SVG line/scatter plots for the CLI figures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace mixcascade::svg {

enum class Style { points, dashed, solid };

struct Series {
  std::string label;
  Style style = Style::solid;
  std::string color = "#1f77b4";
  std::vector<double> x, y;
  std::vector<double> err;  // optional symmetric error bars (points only)
};

struct Plot {
  std::string title, x_label, y_label;
  std::vector<Series> series;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

inline double nice_step(double span) {
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

/// Writes the plot. Non-finite points are skipped. `stamp`, when non-empty,
/// is embedded as a comment (omitted for reproducible output).
inline void write_svg(std::ostream& os, const Plot& plot, const std::string& stamp = {}) {
  constexpr double W = 640, H = 440, L = 70, R = 170, Tm = 40, B = 55;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      const double e = s.err.empty() ? 0.0 : s.err[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  if (!(x0 < x1)) { x0 -= 1; x1 += 1; }
  if (!(y0 < y1)) { y0 -= 1; y1 += 1; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - Tm - B); };
  using detail::fmt;

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!stamp.empty()) os << "<!-- generated " << detail::escape(stamp) << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt((L + W - R) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << (W - L - R) << "\" height=\""
     << (H - Tm - B) << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xs = detail::nice_step(x1 - x0), ys = detail::nice_step(y1 - y0);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs)
    os << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << H - B << "\" x2=\"" << fmt(px(t))
       << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/><text x=\"" << fmt(px(t)) << "\" y=\""
       << H - B + 18 << "\" text-anchor=\"middle\">" << detail::tick_label(t) << "</text>\n";
  for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys)
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << L << "\" y2=\""
       << fmt(py(t)) << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << fmt(py(t) + 4)
       << "\" text-anchor=\"end\">" << detail::tick_label(t) << "</text>\n";
  os << "<text x=\"" << fmt((L + W - R) / 2) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << detail::escape(plot.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << fmt((Tm + H - B) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fmt((Tm + H - B) / 2) << ")\">" << detail::escape(plot.y_label) << "</text>\n";

  double legend_y = Tm + 10;
  for (const auto& s : plot.series) {
    if (s.style == Style::points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        if (!s.err.empty() && s.err[i] > 0)
          os << "<line x1=\"" << fmt(px(s.x[i])) << "\" y1=\"" << fmt(py(s.y[i] - s.err[i]))
             << "\" x2=\"" << fmt(px(s.x[i])) << "\" y2=\"" << fmt(py(s.y[i] + s.err[i]))
             << "\" stroke=\"" << s.color << "\"/>\n";
        os << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i]))
           << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
      }
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
      if (s.style == Style::dashed) os << " stroke-dasharray=\"6,4\"";
      os << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
      os << "\"/>\n";
    }
    const double lx = W - R + 12;
    if (s.style == Style::points)
      os << "<circle cx=\"" << lx + 10 << "\" cy=\"" << legend_y << "\" r=\"3.5\" fill=\"" << s.color
         << "\"/>\n";
    else
      os << "<line x1=\"" << lx << "\" y1=\"" << legend_y << "\" x2=\"" << lx + 20 << "\" y2=\""
         << legend_y << "\" stroke=\"" << s.color << "\""
         << (s.style == Style::dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << lx + 26 << "\" y=\"" << legend_y + 4 << "\">" << detail::escape(s.label)
       << "</text>\n";
    legend_y += 18;
  }
  os << "</svg>\n";
}

}  // namespace mixcascade::svg
