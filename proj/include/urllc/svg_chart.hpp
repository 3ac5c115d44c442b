#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace urllc {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> lo;  // band lower edge; empty = no band
  std::vector<double> hi;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
  std::optional<double> baseline;  // dashed horizontal reference line
  std::string baseline_label = "manual";
};

// Fixed-size SVG: axes with tick labels, one <polyline> per series, one
// <polygon> per band, one dashed <line> for the baseline. Output depends
// only on the chart contents.
std::string render_linechart_svg(const LineChart& chart);
void write_linechart_svg(const LineChart& chart, const std::filesystem::path& path);

}  // namespace urllc
