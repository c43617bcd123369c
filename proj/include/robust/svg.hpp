#pragma once

// Minimal SVG output for diagnostic plots: scatter layers, reference lines,
// polylines, and a block heat map.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace robust::svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x, y;
  bool line = false;  // polyline instead of markers
};

struct Rule {
  bool vertical = false;
  double at = 0.0;
  std::string color = "#888888";
};

class Plot {
 public:
  Plot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void add(Series s) { series_.push_back(std::move(s)); }
  void hline(double y, std::string color = "#888888") { rules_.push_back({false, y, std::move(color)}); }
  void vline(double x, std::string color = "#888888") { rules_.push_back({true, x, std::move(color)}); }
  void equal_aspect() { equal_ = true; }

  std::string render(int width = 640, int height = 480) const {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series_) {
      for (double v : s.x) if (std::isfinite(v)) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
      for (double v : s.y) if (std::isfinite(v)) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
    }
    for (const auto& r : rules_) {
      if (r.vertical) { x0 = std::min(x0, r.at); x1 = std::max(x1, r.at); }
      else { y0 = std::min(y0, r.at); y1 = std::max(y1, r.at); }
    }
    if (!(x0 <= x1)) { x0 = 0; x1 = 1; }
    if (!(y0 <= y1)) { y0 = 0; y1 = 1; }
    if (x1 - x0 == 0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 == 0) { y0 -= 0.5; y1 += 0.5; }
    const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
    x0 -= px; x1 += px; y0 -= py; y1 += py;

    const double left = 70, right = 20, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;
    double sx = pw / (x1 - x0), sy = ph / (y1 - y0);
    if (equal_) sx = sy = std::min(sx, sy);
    auto X = [&](double v) { return left + (v - x0) * sx; };
    auto Y = [&](double v) { return top + ph - (v - y0) * sy; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title_) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double vx = x0 + (x1 - x0) * t / 4.0, vy = y0 + (y1 - y0) * t / 4.0;
      o << "<text x=\"" << num(X(vx)) << "\" y=\"" << num(top + ph + 16)
        << "\" text-anchor=\"middle\">" << tick(vx) << "</text>\n";
      o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(Y(vy) + 4) << "\" text-anchor=\"end\">"
        << tick(vy) << "</text>\n";
    }
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << escape(xlabel_) << "</text>\n";
    o << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(top + ph / 2) << ")\">" << escape(ylabel_) << "</text>\n";
    for (const auto& r : rules_) {
      if (r.vertical)
        o << "<line x1=\"" << num(X(r.at)) << "\" y1=\"" << top << "\" x2=\"" << num(X(r.at)) << "\" y2=\""
          << num(top + ph) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"5,4\"/>\n";
      else
        o << "<line x1=\"" << left << "\" y1=\"" << num(Y(r.at)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
          << num(Y(r.at)) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"5,4\"/>\n";
    }
    int legend = 0;
    for (const auto& s : series_) {
      if (s.line) {
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << num(X(s.x[i])) << ',' << num(Y(s.y[i])) << ' ';
        o << "\"/>\n";
      } else {
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
            o << "<circle cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(Y(s.y[i])) << "\" r=\"3\" fill=\""
              << s.color << "\"/>\n";
      }
      if (!s.label.empty()) {
        const double ly = top + 14 + 15 * legend++;
        o << "<rect x=\"" << num(left + pw - 130) << "\" y=\"" << num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
          << s.color << "\"/><text x=\"" << num(left + pw - 115) << "\" y=\"" << num(ly) << "\">"
          << escape(s.label) << "</text>\n";
      }
    }
    o << "</svg>\n";
    return o.str();
  }

 private:
  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
  std::vector<Rule> rules_;
  bool equal_ = false;
};

/// Diverging colour for a value in [-1, 1]: blue (low), yellow (0), red (high).
inline std::string diverging(double v) {
  v = std::clamp(v, -1.0, 1.0);
  const std::array<double, 3> yellow{255, 230, 90}, red{215, 25, 28}, blue{44, 90, 200};
  const auto& end = v >= 0 ? red : blue;
  const double t = std::fabs(v);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(yellow[0] + t * (end[0] - yellow[0]))),
                static_cast<int>(std::lround(yellow[1] + t * (end[1] - yellow[1]))),
                static_cast<int>(std::lround(yellow[2] + t * (end[2] - yellow[2]))));
  return buf;
}

/// Yellow (0) to black (1) for the rowmap.
inline std::string grayscale(double v) {
  v = std::clamp(v, 0.0, 1.0);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(255 * (1 - v))),
                static_cast<int>(std::lround(230 * (1 - v))), static_cast<int>(std::lround(90 * (1 - v))));
  return buf;
}

struct Heatmap {
  std::vector<std::vector<double>> cells;  // [row][col]
  std::vector<std::string> row_labels, col_labels;
  bool gray = false;
  std::string title;
};

/// Several heat maps side by side sharing the row axis.
inline std::string render_heatmaps(const std::vector<Heatmap>& maps, const std::string& title) {
  const double cell = 14, left = 60, top = 60, gap = 30;
  std::size_t rows = 0;
  for (const auto& m : maps) rows = std::max(rows, m.cells.size());
  double width = left;
  for (const auto& m : maps) width += (m.cells.empty() ? 0 : m.cells[0].size()) * cell + gap;
  const double height = top + rows * cell + 20;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left) << "\" y=\"18\" font-size=\"14\">" << escape(title) << "</text>\n";
  double x = left;
  for (std::size_t mi = 0; mi < maps.size(); ++mi) {
    const auto& m = maps[mi];
    o << "<text x=\"" << num(x) << "\" y=\"36\" font-size=\"11\">" << escape(m.title) << "</text>\n";
    for (std::size_t r = 0; r < m.cells.size(); ++r) {
      if (mi == 0 && r < m.row_labels.size())
        o << "<text x=\"" << num(left - 4) << "\" y=\"" << num(top + r * cell + 10) << "\" text-anchor=\"end\">"
          << escape(m.row_labels[r]) << "</text>\n";
      for (std::size_t c = 0; c < m.cells[r].size(); ++c) {
        const double v = m.cells[r][c];
        o << "<rect x=\"" << num(x + c * cell) << "\" y=\"" << num(top + r * cell) << "\" width=\"" << num(cell)
          << "\" height=\"" << num(cell) << "\" fill=\"" << (m.gray ? grayscale(v) : diverging(v))
          << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
      }
    }
    const std::size_t cols = m.cells.empty() ? 0 : m.cells[0].size();
    for (std::size_t c = 0; c < cols && c < m.col_labels.size(); ++c)
      o << "<text x=\"" << num(x + c * cell + cell / 2) << "\" y=\"" << num(top - 4)
        << "\" text-anchor=\"middle\">" << escape(m.col_labels[c]) << "</text>\n";
    x += cols * cell + gap;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace robust::svg
