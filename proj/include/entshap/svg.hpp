#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/io.hpp"

namespace entshap {

// Minimal dependency-free SVG output: horizontal bar chart for attribution
// profiles and a multi-series line chart for convergence curves.
namespace svg {

inline std::string esc(const std::string& s) {
  std::string out;
  for (const char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                             const std::string& title) {
  require_config(labels.size() == values.size() && !values.empty(), "svg: label/value mismatch");
  const double w = 640.0, row_h = 22.0, left = 120.0, top = 40.0;
  const double h = top + row_h * static_cast<double>(values.size()) + 20.0;
  double vmax = 0.0;
  for (const auto v : values) vmax = std::max(vmax, std::fabs(v));
  if (vmax == 0.0) vmax = 1.0;
  const double mid = left + (w - left - 20.0) / 2.0;
  const double scale = (w - left - 20.0) / 2.0 / vmax;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) + "\">\n";
  s += "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" + esc(title) + "</text>\n";
  s += "<line x1=\"" + num(mid) + "\" y1=\"" + num(top - 10.0) + "\" x2=\"" + num(mid) + "\" y2=\"" +
       num(h - 15.0) + "\" stroke=\"#999\"/>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double y = top + row_h * static_cast<double>(i);
    const double v = values[i] * scale;
    const double x0 = v >= 0.0 ? mid : mid + v;
    s += "<rect x=\"" + num(x0) + "\" y=\"" + num(y) + "\" width=\"" + num(std::fabs(v)) +
         "\" height=\"" + num(row_h - 6.0) + "\" fill=\"" + (values[i] >= 0.0 ? "#4477aa" : "#cc6677") + "\"/>\n";
    s += "<text x=\"5\" y=\"" + num(y + row_h - 10.0) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
         esc(labels[i]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

inline std::string line_chart(const std::vector<Series>& series, const std::string& title,
                              bool log_x = false) {
  require_config(!series.empty(), "svg: no series");
  const double w = 640.0, h = 400.0, left = 60.0, top = 40.0, right = 20.0, bottom = 40.0;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& ser : series) {
    require_config(ser.xs.size() == ser.ys.size() && !ser.xs.empty(), "svg: series shape mismatch");
    for (std::size_t i = 0; i < ser.xs.size(); ++i) {
      const double x = log_x ? std::log10(ser.xs[i]) : ser.xs[i];
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, ser.ys[i]);
      ymax = std::max(ymax, ser.ys[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  auto px = [&](double x) {
    const double t = ((log_x ? std::log10(x) : x) - xmin) / (xmax - xmin);
    return left + t * (w - left - right);
  };
  auto py = [&](double y) { return h - bottom - (y - ymin) / (ymax - ymin) * (h - top - bottom); };
  const char* colors[] = {"#4477aa", "#cc6677", "#228833", "#aa8833", "#aa44aa", "#44aaaa"};
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) + "\">\n";
  s += "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" + esc(title) + "</text>\n";
  s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(w - left - right) +
       "\" height=\"" + num(h - top - bottom) + "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& ser = series[k];
    std::string path;
    for (std::size_t i = 0; i < ser.xs.size(); ++i)
      path += (i == 0 ? "M" : "L") + num(px(ser.xs[i])) + " " + num(py(ser.ys[i]));
    s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + colors[k % 6] + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(w - 150.0) + "\" y=\"" + num(top + 16.0 * static_cast<double>(k + 1)) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + colors[k % 6] + "\">" + esc(ser.name) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace svg
}  // namespace entshap
