#pragma once

#include <string>
#include <vector>

namespace dicode::tools {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> lo, hi;  // empty: no band
};

struct Bar {
  std::string label;
  double mean = 0.0;
  double err = 0.0;
  std::vector<double> points;
};

/// Line chart with optional confidence bands. Writes `<stem>.svg` and `<stem>.ppm`.
void plot_curves(const std::string& stem, const std::string& title, const std::string& xlabel,
                 const std::string& ylabel, const std::vector<Series>& series);

/// Grid of values in [0, 1] (row-major) rendered as a heatmap, one panel per grid.
void plot_heatmaps(const std::string& stem, const std::vector<std::string>& titles,
                   const std::vector<std::vector<double>>& grids, int rows, int cols);

/// Bars with error whiskers and the raw points overlaid.
void plot_bars(const std::string& stem, const std::string& title, const std::string& ylabel,
               const std::vector<Bar>& bars);

}  // namespace dicode::tools
