#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evit/errors.hpp"
#include "evit/io.hpp"

namespace evit {

// Self-contained static SVG charts: axes with ticks, an optional shaded
// band, lines, and scatter points. No plotting dependency; the files open
// in any browser.
class SvgPlot {
public:
  SvgPlot(std::string title, std::string x_label, std::string y_label,
          double x_min, double x_max, double y_min, double y_max)
      : title_(std::move(title)),
        x_label_(std::move(x_label)),
        y_label_(std::move(y_label)),
        x_min_(x_min),
        x_max_(x_max),
        y_min_(y_min),
        y_max_(y_max) {
    if (!(x_max_ > x_min_) || !(y_max_ > y_min_))
      throw invalid_input_error("SvgPlot: empty axis range");
  }

  void add_band(const std::vector<double>& x, const std::vector<double>& lo,
                const std::vector<double>& hi, const std::string& fill) {
    std::string points;
    for (std::size_t i = 0; i < x.size(); ++i)
      points += coord(x[i], hi[i]) + " ";
    for (std::size_t i = x.size(); i-- > 0;)
      points += coord(x[i], lo[i]) + " ";
    body_ += "  <polygon points=\"" + points + "\" fill=\"" + fill +
             "\" fill-opacity=\"0.35\" stroke=\"none\"/>\n";
  }

  void add_line(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& stroke) {
    std::string points;
    for (std::size_t i = 0; i < x.size(); ++i)
      points += coord(x[i], y[i]) + " ";
    body_ += "  <polyline points=\"" + points + "\" fill=\"none\" stroke=\"" +
             stroke + "\" stroke-width=\"2\"/>\n";
  }

  void add_points(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& fill) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      body_ += "  <circle cx=\"" + fmt(px(x[i])) + "\" cy=\"" + fmt(py(y[i])) +
               "\" r=\"3\" fill=\"" + fill + "\" fill-opacity=\"0.7\"/>\n";
    }
  }

  std::string render() const {
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           std::to_string(kWidth) + "\" height=\"" + std::to_string(kHeight) +
           "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
           std::to_string(kHeight) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + std::to_string(kWidth / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" +
           title_ + "</text>\n";
    svg += axes();
    svg += body_;
    svg += "</svg>\n";
    return svg;
  }

private:
  static constexpr int kWidth = 640;
  static constexpr int kHeight = 480;
  static constexpr int kMarginLeft = 70;
  static constexpr int kMarginRight = 20;
  static constexpr int kMarginTop = 40;
  static constexpr int kMarginBottom = 55;

  static std::string fmt(double v) { return format_double(std::round(v * 100.0) / 100.0); }

  double px(double x) const {
    double t = (x - x_min_) / (x_max_ - x_min_);
    return kMarginLeft + t * (kWidth - kMarginLeft - kMarginRight);
  }

  double py(double y) const {
    double t = (y - y_min_) / (y_max_ - y_min_);
    return kHeight - kMarginBottom - t * (kHeight - kMarginTop - kMarginBottom);
  }

  std::string coord(double x, double y) const {
    return fmt(px(x)) + "," + fmt(py(y));
  }

  std::string axes() const {
    std::string out;
    double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    out += "  <line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" +
           fmt(x1) + "\" y2=\"" + fmt(y0) + "\" stroke=\"black\"/>\n";
    out += "  <line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" +
           fmt(x0) + "\" y2=\"" + fmt(y1) + "\" stroke=\"black\"/>\n";
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
      double fx = x_min_ + (x_max_ - x_min_) * i / ticks;
      double fy = y_min_ + (y_max_ - y_min_) * i / ticks;
      out += "  <line x1=\"" + fmt(px(fx)) + "\" y1=\"" + fmt(y0) + "\" x2=\"" +
             fmt(px(fx)) + "\" y2=\"" + fmt(y0 + 5) + "\" stroke=\"black\"/>\n";
      out += "  <text x=\"" + fmt(px(fx)) + "\" y=\"" + fmt(y0 + 20) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"11\">" +
             tick_label(fx) + "</text>\n";
      out += "  <line x1=\"" + fmt(x0 - 5) + "\" y1=\"" + fmt(py(fy)) +
             "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(py(fy)) +
             "\" stroke=\"black\"/>\n";
      out += "  <text x=\"" + fmt(x0 - 8) + "\" y=\"" + fmt(py(fy) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\">" +
             tick_label(fy) + "</text>\n";
    }
    out += "  <text x=\"" + std::to_string((kMarginLeft + kWidth - kMarginRight) / 2) +
           "\" y=\"" + std::to_string(kHeight - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">" +
           x_label_ + "</text>\n";
    out += "  <text x=\"18\" y=\"" +
           std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 18 " +
           std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) + ")\">" +
           y_label_ + "</text>\n";
    return out;
  }

  static std::string tick_label(double v) {
    double rounded = std::round(v * 1000.0) / 1000.0;
    if (rounded == 0.0) rounded = 0.0;  // normalize -0
    return format_double(rounded);
  }

  std::string title_, x_label_, y_label_;
  double x_min_, x_max_, y_min_, y_max_;
  std::string body_;
};

}  // namespace evit
