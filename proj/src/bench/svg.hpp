#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spi {

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // NaN y breaks the line
  // Optional shaded band, one (low, high) per point.
  std::vector<std::pair<double, double>> band;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
};

// Self-contained SVG document.
std::string render_svg(const LineChart& chart);

}  // namespace spi
