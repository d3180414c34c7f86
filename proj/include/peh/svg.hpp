#pragma once

#include <string>
#include <vector>

namespace peh {

// Minimal deterministic SVG chart writer.  Every renderer is a pure function
// of its arguments — identical inputs yield identical bytes — so chart files
// can always be regenerated from the tabular artifacts they were drawn from.
// Non-finite samples split a polyline instead of corrupting it.

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 800;
  int height = 480;
};

struct BarGroup {
  std::string label;              // category shown under the group
  std::vector<double> values;     // one bar per series name
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> series_names;  // legend; every group must match its size
  std::vector<BarGroup> groups;
  int width = 800;
  int height = 480;
};

struct Heatmap {
  std::string title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> values;  // row-major, rows x cols
  bool annotate = true;                     // print each value inside its cell
};

std::string render_line_chart(const LineChart& chart);
std::string render_bar_chart(const BarChart& chart);
std::string render_heatmap(const Heatmap& chart);

}  // namespace peh
