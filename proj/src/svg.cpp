#include "peh/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace peh {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

const char* color(std::size_t i) { return kPalette[i % kPaletteSize]; }

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
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

// Closest "nice" step (1, 2 or 5 times a power of ten) for ~`target` ticks.
double nice_step(double range, int target) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  if (norm < 1.5) return mag;
  if (norm < 3.5) return 2.0 * mag;
  if (norm < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

// Tight finite range over the data, padded so a flat line is still visible.
Range data_range(const std::vector<const std::vector<double>*>& columns) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* col : columns)
    for (double v : *col)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) {
    const double pad = (lo == 0.0) ? 0.5 : std::abs(lo) * 0.05;
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

struct Frame {
  double x0, y0, x1, y1;  // plot rectangle in pixels, y grows downward
  Range xr, yr;

  double sx(double x) const { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); }
  double sy(double y) const { return y1 - (y - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); }
};

void open_svg(std::ostringstream& o, int w, int h) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
    << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
}

void title_text(std::ostringstream& o, int width, const std::string& title) {
  if (title.empty()) return;
  o << "<text x=\"" << width / 2
    << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">"
    << esc(title) << "</text>\n";
}

void axes_and_y_ticks(std::ostringstream& o, const Frame& f, const std::string& y_label) {
  const double step = nice_step(f.yr.hi - f.yr.lo, 5);
  const double first = std::ceil(f.yr.lo / step) * step;
  for (double v = first; v <= f.yr.hi + 1e-9 * step; v += step) {
    const double y = f.sy(v);
    o << "<line x1=\"" << px(f.x0) << "\" y1=\"" << px(y) << "\" x2=\"" << px(f.x1) << "\" y2=\""
      << px(y) << "\" stroke=\"#e0e0e0\"/>\n"
      << "<text x=\"" << px(f.x0 - 6) << "\" y=\"" << px(y + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
      << tick_text(std::abs(v) < 1e-12 * step ? 0.0 : v) << "</text>\n";
  }
  o << "<line x1=\"" << px(f.x0) << "\" y1=\"" << px(f.y0) << "\" x2=\"" << px(f.x0) << "\" y2=\""
    << px(f.y1) << "\" stroke=\"#333333\"/>\n"
    << "<line x1=\"" << px(f.x0) << "\" y1=\"" << px(f.y1) << "\" x2=\"" << px(f.x1) << "\" y2=\""
    << px(f.y1) << "\" stroke=\"#333333\"/>\n";
  if (!y_label.empty())
    o << "<text x=\"14\" y=\"" << px((f.y0 + f.y1) / 2)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << px((f.y0 + f.y1) / 2) << ")\">" << esc(y_label) << "</text>\n";
}

void legend(std::ostringstream& o, const Frame& f, const std::vector<std::string>& names) {
  if (names.empty()) return;
  double y = f.y0 + 6;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double x = f.x1 - 150;
    o << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"12\" height=\"12\" fill=\""
      << color(i) << "\"/>\n"
      << "<text x=\"" << px(x + 16) << "\" y=\"" << px(y + 10)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(names[i]) << "</text>\n";
    y += 16;
  }
}

}  // namespace

std::string render_line_chart(const LineChart& chart) {
  std::ostringstream o;
  open_svg(o, chart.width, chart.height);
  title_text(o, chart.width, chart.title);

  Frame f;
  f.x0 = 64;
  f.y0 = 36;
  f.x1 = chart.width - 16;
  f.y1 = chart.height - 48;

  std::vector<const std::vector<double>*> xs, ys;
  for (const Series& s : chart.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  f.xr = data_range(xs);
  f.yr = data_range(ys);

  axes_and_y_ticks(o, f, chart.y_label);

  {  // x ticks
    const double step = nice_step(f.xr.hi - f.xr.lo, 6);
    const double first = std::ceil(f.xr.lo / step) * step;
    for (double v = first; v <= f.xr.hi + 1e-9 * step; v += step)
      o << "<text x=\"" << px(f.sx(v)) << "\" y=\"" << px(f.y1 + 16)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << tick_text(std::abs(v) < 1e-12 * step ? 0.0 : v) << "</text>\n";
    if (!chart.x_label.empty())
      o << "<text x=\"" << px((f.x0 + f.x1) / 2) << "\" y=\"" << px(chart.height - 10)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        << esc(chart.x_label) << "</text>\n";
  }

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const Series& s = chart.series[si];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    std::string d;
    bool open = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        open = false;  // gap: restart the path after bad samples
        continue;
      }
      d += (open ? " L" : (d.empty() ? "M" : " M"));
      d += px(f.sx(s.x[i])) + " " + px(f.sy(s.y[i]));
      open = true;
    }
    if (!d.empty())
      o << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << color(si)
        << "\" stroke-width=\"1.5\"/>\n";
  }

  std::vector<std::string> names;
  for (const Series& s : chart.series) names.push_back(s.name);
  if (names.size() > 1 || (names.size() == 1 && !names[0].empty())) legend(o, f, names);

  o << "</svg>\n";
  return o.str();
}

std::string render_bar_chart(const BarChart& chart) {
  for (const BarGroup& g : chart.groups)
    if (g.values.size() != chart.series_names.size())
      throw std::invalid_argument("bar chart: group '" + g.label +
                                  "' does not match the series-name count");

  std::ostringstream o;
  open_svg(o, chart.width, chart.height);
  title_text(o, chart.width, chart.title);

  Frame f;
  f.x0 = 64;
  f.y0 = 36;
  f.x1 = chart.width - 16;
  f.y1 = chart.height - 48;

  std::vector<double> all{0.0};  // bars grow from a zero baseline
  for (const BarGroup& g : chart.groups)
    for (double v : g.values)
      if (std::isfinite(v)) all.push_back(v);
  std::vector<const std::vector<double>*> cols{&all};
  f.yr = data_range(cols);
  f.xr = {0.0, 1.0};

  axes_and_y_ticks(o, f, chart.y_label);

  const std::size_t ng = chart.groups.size();
  const std::size_t ns = std::max<std::size_t>(chart.series_names.size(), 1);
  if (ng > 0) {
    const double group_w = (f.x1 - f.x0) / static_cast<double>(ng);
    const double bar_w = group_w * 0.8 / static_cast<double>(ns);
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const BarGroup& g = chart.groups[gi];
      const double gx = f.x0 + group_w * (static_cast<double>(gi) + 0.1);
      for (std::size_t si = 0; si < g.values.size(); ++si) {
        const double v = g.values[si];
        if (!std::isfinite(v)) continue;
        const double ytop = f.sy(std::max(v, 0.0));
        const double ybot = f.sy(std::min(v, 0.0));
        o << "<rect x=\"" << px(gx + bar_w * static_cast<double>(si)) << "\" y=\"" << px(ytop)
          << "\" width=\"" << px(bar_w) << "\" height=\"" << px(std::max(ybot - ytop, 0.5))
          << "\" fill=\"" << color(si) << "\"/>\n";
      }
      o << "<text x=\"" << px(gx + group_w * 0.4) << "\" y=\"" << px(f.y1 + 16)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << esc(g.label)
        << "</text>\n";
    }
  }

  if (chart.series_names.size() > 1) legend(o, f, chart.series_names);
  o << "</svg>\n";
  return o.str();
}

std::string render_heatmap(const Heatmap& chart) {
  const std::size_t rows = chart.values.size();
  std::size_t cols = chart.col_labels.size();
  for (const auto& r : chart.values) cols = std::max(cols, r.size());

  std::size_t label_chars = 1;
  for (const auto& s : chart.row_labels) label_chars = std::max(label_chars, s.size());

  const int cell = 48;
  const int left = 16 + static_cast<int>(label_chars) * 8;
  const int top = 64;
  const int width = left + static_cast<int>(cols) * cell + 24;
  const int height = top + static_cast<int>(rows) * cell + 16;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : chart.values)
    for (double v : r)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (lo == hi) hi = lo + 1.0;

  auto shade = [&](double v) {
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    // white -> deep blue ramp
    const int r = static_cast<int>(std::lround(247 + t * (8 - 247)));
    const int g = static_cast<int>(std::lround(251 + t * (48 - 251)));
    const int b = static_cast<int>(std::lround(255 + t * (107 - 255)));
    char buf[10];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };

  std::ostringstream o;
  open_svg(o, width, height);
  title_text(o, width, chart.title);

  for (std::size_t j = 0; j < chart.col_labels.size(); ++j)
    o << "<text x=\"" << left + static_cast<int>(j) * cell + cell / 2 << "\" y=\"" << top - 8
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
      << esc(chart.col_labels[j]) << "</text>\n";

  for (std::size_t i = 0; i < rows; ++i) {
    if (i < chart.row_labels.size())
      o << "<text x=\"" << left - 6 << "\" y=\"" << top + static_cast<int>(i) * cell + cell / 2 + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << esc(chart.row_labels[i]) << "</text>\n";
    for (std::size_t j = 0; j < chart.values[i].size(); ++j) {
      const double v = chart.values[i][j];
      const int x = left + static_cast<int>(j) * cell;
      const int y = top + static_cast<int>(i) * cell;
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
        << "\" fill=\"" << (std::isfinite(v) ? shade(v) : std::string("#cccccc"))
        << "\" stroke=\"#ffffff\"/>\n";
      if (chart.annotate && std::isfinite(v)) {
        const double t = (v - lo) / (hi - lo);
        o << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" fill=\""
          << (t > 0.6 ? "#ffffff" : "#000000") << "\">" << tick_text(v) << "</text>\n";
      }
    }
  }

  o << "</svg>\n";
  return o.str();
}

}  // namespace peh
