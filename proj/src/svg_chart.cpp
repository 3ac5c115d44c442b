#include "urllc/svg_chart.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "urllc/metrics_io.hpp"

namespace urllc {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 130.0;  // room for the legend
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    } else if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string render_linechart_svg(const LineChart& chart) {
  Range xr;
  Range yr;
  for (const auto& s : chart.series) {
    if (s.x.size() != s.mean.size()) throw std::invalid_argument("series x/mean length mismatch");
    const bool band = !s.lo.empty();
    if (band && (s.lo.size() != s.x.size() || s.hi.size() != s.x.size())) {
      throw std::invalid_argument("series band length mismatch");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.include(s.x[i]);
      yr.include(s.mean[i]);
      if (band) {
        yr.include(s.lo[i]);
        yr.include(s.hi[i]);
      }
    }
  }
  if (chart.baseline) yr.include(*chart.baseline);
  xr.finish();
  yr.finish();
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
      << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << escape(chart.title) << "</text>\n";

  // Axes.
  out << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\""
      << num(kLeft + plot_w) << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
      << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n";
  out << "</g>\n";
  out << "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"10\">\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + plot_h + 16)
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 3)
        << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
  }
  out << "</g>\n";
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << escape(chart.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2) << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << num(kTop + plot_h / 2) << ")\">" << escape(chart.y_label) << "</text>\n";

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const ChartSeries& s = chart.series[si];
    const char* color = kPalette[si % kPalette.size()];
    if (!s.lo.empty() && !s.x.empty()) {
      out << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" "
          << "stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << num(px(s.x[i])) << ',' << num(py(s.hi[i])) << ' ';
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        out << num(px(s.x[i])) << ',' << num(py(s.lo[i])) << (i > 0 ? " " : "");
      }
      out << "\"/>\n";
    }
    out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << (i > 0 ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.mean[i]));
    }
    out << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(si);
    out << "<text x=\"" << num(kLeft + plot_w + 12) << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
        << escape(s.name) << "</text>\n";
  }

  if (chart.baseline) {
    const double y = py(*chart.baseline);
    out << "<line class=\"baseline\" data-value=\"" << format_double(*chart.baseline)
        << "\" x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(kLeft + plot_w) << "\" y2=\"" << num(y)
        << "\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(chart.series.size());
    out << "<text x=\"" << num(kLeft + plot_w + 12) << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(chart.baseline_label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_linechart_svg(const LineChart& chart, const std::filesystem::path& path) {
  write_text_file(path, render_linechart_svg(chart));
}

}  // namespace urllc
