#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace optbench {

// One polyline; values are plotted against their 0-based index.
struct CurveSeries {
  std::string label;
  std::string color;  // any SVG color string
  std::vector<double> values;
};

// Distinct colors for up to ten curves on one chart.
inline constexpr std::array<std::string_view, 10> kChartPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};

// Self-contained SVG line chart (no scripts, no external references):
// framed plot area, light gridlines, tick labels, legend on the right.
// Deterministic text output for fixed inputs.
std::string render_line_chart(std::string_view title, std::string_view x_label,
                              std::string_view y_label,
                              const std::vector<CurveSeries>& series);

}  // namespace optbench
