#include "optbench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "optbench/errors.hpp"

namespace optbench {
namespace {

constexpr double kWidth = 880.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 72.0;
constexpr double kRight = kWidth - 190.0;  // legend lives right of the frame
constexpr double kTop = 48.0;
constexpr double kBottom = kHeight - 56.0;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_line_chart(std::string_view title, std::string_view x_label,
                              std::string_view y_label,
                              const std::vector<CurveSeries>& series) {
  if (series.empty()) throw DomainError("render_line_chart: no series");
  std::size_t max_len = 0;
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    if (s.values.empty()) throw DomainError("render_line_chart: empty series");
    max_len = std::max(max_len, s.values.size());
    for (const double v : s.values) {
      if (!std::isfinite(v)) continue;
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (!std::isfinite(y_min)) {
    y_min = 0.0;
    y_max = 1.0;
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;
  const double x_max = static_cast<double>(max_len > 1 ? max_len - 1 : 1);

  const auto x_of = [&](double epoch) {
    return kLeft + (kRight - kLeft) * (epoch / x_max);
  };
  const auto y_of = [&](double v) {
    return kBottom - (kBottom - kTop) * ((v - y_min) / (y_max - y_min));
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
         num(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num((kLeft + kRight) / 2) +
         "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + escape(title) + "</text>\n";

  // gridlines and tick labels
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double frac = static_cast<double>(i) / kTicks;
    const double yv = y_min + frac * (y_max - y_min);
    const double y = y_of(yv);
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kRight) +
           "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           tick_text(yv) + "</text>\n";

    const double xv = frac * x_max;
    const double x = x_of(xv);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(kBottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           tick_text(std::round(xv)) + "</text>\n";
  }

  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
         num(kRight - kLeft) + "\" height=\"" + num(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" + num(kHeight - 14) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape(x_label) + "</text>\n";
  svg += "<text x=\"20\" y=\"" + num((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 20 " + num((kTop + kBottom) / 2) + ")\">" +
         escape(y_label) + "</text>\n";

  for (const auto& s : series) {
    svg += "<polyline fill=\"none\" stroke=\"" + escape(s.color) +
           "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (i) svg += ' ';
      const double v = s.values[i];
      svg += num(x_of(static_cast<double>(i))) + "," +
             num(y_of(std::isfinite(v) ? std::clamp(v, y_min, y_max) : y_max));
    }
    svg += "\"/>\n";
  }

  // legend
  double ly = kTop + 6;
  for (const auto& s : series) {
    svg += "<line x1=\"" + num(kRight + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(kRight + 34) + "\" y2=\"" + num(ly) + "\" stroke=\"" + escape(s.color) +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(kRight + 40) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.label) +
           "</text>\n";
    ly += 18;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace optbench
