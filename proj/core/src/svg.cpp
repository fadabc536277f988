#include "quanta/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "quanta/format.hpp"

namespace quanta::svg {

namespace {

constexpr int kMarginLeft = 72;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 52;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2"};
constexpr int kPaletteSize = 10;

struct AxisRange {
  double lo = 0.0, hi = 1.0;
  AxisScale scale = AxisScale::Linear;

  double to_unit(double v) const {
    if (scale == AxisScale::Log)
      return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    return (v - lo) / (hi - lo);
  }
};

void validate_value(double v, AxisScale scale, const char* axis) {
  if (!std::isfinite(v))
    throw std::invalid_argument(std::string("nonfinite coordinate on ") + axis);
  if (scale == AxisScale::Log && !(v > 0.0))
    throw std::domain_error(std::string("log-scale ") + axis +
                            " axis requires positive values");
}

AxisRange make_range(double lo, double hi, AxisScale scale) {
  AxisRange r;
  r.scale = scale;
  if (scale == AxisScale::Log) {
    const double pad = std::pow(hi / lo, 0.04);
    r.lo = lo / pad;
    r.hi = hi * pad * (lo == hi ? 10.0 : 1.0);
    if (lo == hi) r.lo = lo / 10.0;
  } else {
    double pad = 0.05 * (hi - lo);
    if (pad == 0.0) pad = hi == 0.0 ? 1.0 : 0.1 * std::fabs(hi);
    r.lo = lo - pad;
    r.hi = hi + pad;
  }
  return r;
}

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (span / (mag * mult) <= 6.0) {
      step = mag * mult;
      break;
    }
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step) * step;
  for (double t = first; t <= hi + 1e-9 * span; t += step) {
    ticks.push_back(t == 0.0 ? 0.0 : t);  // normalize -0
  }
  return ticks;
}

std::vector<double> log_ticks(double lo, double hi) {
  const int d0 = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
  const int d1 = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
  int every = 1;
  if (d1 - d0 > 10) every = (d1 - d0 + 9) / 10;
  std::vector<double> ticks;
  for (int d = d0; d <= d1; d += every) ticks.push_back(std::pow(10.0, d));
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

std::string tick_label(double v) {
  const double a = std::fabs(v);
  if (v != 0.0 && (a >= 1e5 || a < 1e-3)) {
    const int exp = static_cast<int>(std::floor(std::log10(a) + 1e-9));
    const double mant = v / std::pow(10.0, exp);
    const double rounded = std::round(mant * 100.0) / 100.0;
    return format_compact(rounded) + "e" + std::to_string(exp);
  }
  return format_compact(std::round(v * 1e6) / 1e6);
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : spec.series) {
    for (const auto& [x, y] : s.points) {
      validate_value(x, spec.x_scale, "x");
      validate_value(y, spec.y_scale, "y");
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  const bool empty = !(xmin <= xmax);
  if (empty) {
    xmin = spec.x_scale == AxisScale::Log ? 1.0 : 0.0;
    xmax = spec.x_scale == AxisScale::Log ? 10.0 : 1.0;
    ymin = spec.y_scale == AxisScale::Log ? 1.0 : 0.0;
    ymax = spec.y_scale == AxisScale::Log ? 10.0 : 1.0;
  }

  const AxisRange xr = make_range(xmin, xmax, spec.x_scale);
  const AxisRange yr = make_range(ymin, ymax, spec.y_scale);
  const double plot_w = spec.width_px - kMarginLeft - kMarginRight;
  const double plot_h = spec.height_px - kMarginTop - kMarginBottom;
  auto px = [&](double v) { return kMarginLeft + xr.to_unit(v) * plot_w; };
  auto py = [&](double v) { return kMarginTop + (1.0 - yr.to_unit(v)) * plot_h; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(spec.width_px) + "\" height=\"" +
         std::to_string(spec.height_px) + "\" viewBox=\"0 0 " +
         std::to_string(spec.width_px) + " " + std::to_string(spec.height_px) +
         "\">\n";
  if (!spec.manifest_hash.empty())
    out += "<!-- manifest:" + spec.manifest_hash + " -->\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Frame.
  out += "<rect x=\"" + std::to_string(kMarginLeft) + "\" y=\"" +
         std::to_string(kMarginTop) + "\" width=\"" + format_fixed(plot_w, 2) +
         "\" height=\"" + format_fixed(plot_h, 2) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  const auto xticks = spec.x_scale == AxisScale::Log ? log_ticks(xr.lo, xr.hi)
                                                     : linear_ticks(xr.lo, xr.hi);
  const auto yticks = spec.y_scale == AxisScale::Log ? log_ticks(yr.lo, yr.hi)
                                                     : linear_ticks(yr.lo, yr.hi);
  for (double t : xticks) {
    const std::string x = format_fixed(px(t), 2);
    out += "<line class=\"xtick\" x1=\"" + x + "\" x2=\"" + x + "\" y1=\"" +
           format_fixed(kMarginTop, 2) + "\" y2=\"" +
           format_fixed(kMarginTop + plot_h, 2) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.6\"/>\n";
    out += "<text x=\"" + x + "\" y=\"" +
           format_fixed(kMarginTop + plot_h + 18, 2) +
           "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">" +
           escape_xml(tick_label(t)) + "</text>\n";
  }
  for (double t : yticks) {
    const std::string y = format_fixed(py(t), 2);
    out += "<line class=\"ytick\" x1=\"" + format_fixed(kMarginLeft, 2) +
           "\" x2=\"" + format_fixed(kMarginLeft + plot_w, 2) + "\" y1=\"" + y +
           "\" y2=\"" + y + "\" stroke=\"#dddddd\" stroke-width=\"0.6\"/>\n";
    out += "<text x=\"" + format_fixed(kMarginLeft - 6, 2) + "\" y=\"" + y +
           "\" font-size=\"11\" text-anchor=\"end\" dominant-baseline=\"middle\" "
           "fill=\"#333333\">" +
           escape_xml(tick_label(t)) + "</text>\n";
  }

  int color_idx = 0;
  for (const auto& s : spec.series) {
    const std::string color =
        s.color.empty() ? kPalette[color_idx % kPaletteSize] : s.color;
    ++color_idx;
    if (s.points.empty()) continue;
    std::string pts;
    for (const auto& [x, y] : s.points) {
      if (!pts.empty()) pts += ' ';
      pts += format_fixed(px(x), 2) + "," + format_fixed(py(y), 2);
    }
    out += "<polyline class=\"series\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"" + format_fixed(s.stroke_width, 2) +
           "\" points=\"" + pts + "\"/>\n";
    if (s.markers) {
      for (const auto& [x, y] : s.points) {
        out += "<circle cx=\"" + format_fixed(px(x), 2) + "\" cy=\"" +
               format_fixed(py(y), 2) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
      }
    }
  }

  // Legend (labelled series only, capped to keep the sheet readable).
  std::vector<std::pair<std::string, std::string>> legend;
  color_idx = 0;
  for (const auto& s : spec.series) {
    const std::string color =
        s.color.empty() ? kPalette[color_idx % kPaletteSize] : s.color;
    ++color_idx;
    if (!s.label.empty() && legend.size() < 12)
      legend.emplace_back(s.label, color);
  }
  if (!legend.empty()) {
    const double lx = kMarginLeft + plot_w - 150;
    double ly = kMarginTop + 10;
    out += "<rect x=\"" + format_fixed(lx - 8, 2) + "\" y=\"" +
           format_fixed(ly - 12, 2) + "\" width=\"150\" height=\"" +
           format_fixed(16.0 * legend.size() + 10, 2) +
           "\" fill=\"white\" fill-opacity=\"0.85\" stroke=\"#999999\" "
           "stroke-width=\"0.5\"/>\n";
    for (const auto& [label, color] : legend) {
      out += "<line x1=\"" + format_fixed(lx, 2) + "\" x2=\"" +
             format_fixed(lx + 18, 2) + "\" y1=\"" + format_fixed(ly - 4, 2) +
             "\" y2=\"" + format_fixed(ly - 4, 2) + "\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
      out += "<text x=\"" + format_fixed(lx + 24, 2) + "\" y=\"" +
             format_fixed(ly, 2) + "\" font-size=\"11\" fill=\"#333333\">" +
             escape_xml(label) + "</text>\n";
      ly += 16;
    }
  }

  if (!spec.title.empty())
    out += "<text x=\"" + format_fixed(spec.width_px / 2.0, 2) +
           "\" y=\"22\" font-size=\"14\" text-anchor=\"middle\" "
           "fill=\"#111111\">" +
           escape_xml(spec.title) + "</text>\n";
  if (!spec.x_label.empty())
    out += "<text x=\"" + format_fixed(kMarginLeft + plot_w / 2.0, 2) +
           "\" y=\"" + format_fixed(spec.height_px - 12, 2) +
           "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111111\">" +
           escape_xml(spec.x_label) + "</text>\n";
  if (!spec.y_label.empty())
    out += "<text x=\"16\" y=\"" + format_fixed(kMarginTop + plot_h / 2.0, 2) +
           "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111111\" "
           "transform=\"rotate(-90 16 " +
           format_fixed(kMarginTop + plot_h / 2.0, 2) + ")\">" +
           escape_xml(spec.y_label) + "</text>\n";

  out += "</svg>\n";
  return out;
}

void emit_svg(const PlotSpec& spec, const std::string& path) {
  const std::string body = render_svg(spec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string render_heatmap(const Eigen::MatrixXd& values, double lo, double hi,
                           const std::string& title,
                           const std::string& manifest_hash, int max_cells) {
  if (values.rows() < 1 || values.cols() < 1)
    throw std::invalid_argument("empty heatmap");
  if (!(hi > lo)) throw std::invalid_argument("heatmap range must be nonempty");

  const int cells_r = static_cast<int>(
      std::min<Eigen::Index>(values.rows(), max_cells));
  const int cells_c = static_cast<int>(
      std::min<Eigen::Index>(values.cols(), max_cells));
  constexpr int kSide = 640;
  constexpr int kTop = 36;
  const double cell_h = static_cast<double>(kSide) / cells_r;
  const double cell_w = static_cast<double>(kSide) / cells_c;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kSide) + "\" height=\"" + std::to_string(kSide + kTop) +
         "\" viewBox=\"0 0 " + std::to_string(kSide) + " " +
         std::to_string(kSide + kTop) + "\">\n";
  if (!manifest_hash.empty()) out += "<!-- manifest:" + manifest_hash + " -->\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    out += "<text x=\"" + format_fixed(kSide / 2.0, 2) +
           "\" y=\"22\" font-size=\"14\" text-anchor=\"middle\" "
           "fill=\"#111111\">" +
           escape_xml(title) + "</text>\n";

  for (int r = 0; r < cells_r; ++r) {
    const auto r0 = static_cast<Eigen::Index>(
        static_cast<double>(r) * values.rows() / cells_r);
    const auto r1 = static_cast<Eigen::Index>(
        static_cast<double>(r + 1) * values.rows() / cells_r);
    for (int c = 0; c < cells_c; ++c) {
      const auto c0 = static_cast<Eigen::Index>(
          static_cast<double>(c) * values.cols() / cells_c);
      const auto c1 = static_cast<Eigen::Index>(
          static_cast<double>(c + 1) * values.cols() / cells_c);
      const double mean =
          values.block(r0, c0, std::max<Eigen::Index>(1, r1 - r0),
                       std::max<Eigen::Index>(1, c1 - c0))
              .mean();
      double t = (mean - lo) / (hi - lo);
      t = std::clamp(t, 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      out += "<rect x=\"" + format_fixed(c * cell_w, 2) + "\" y=\"" +
             format_fixed(kTop + r * cell_h, 2) + "\" width=\"" +
             format_fixed(cell_w + 0.5, 2) + "\" height=\"" +
             format_fixed(cell_h + 0.5, 2) + "\" fill=\"rgb(" +
             std::to_string(shade) + "," + std::to_string(shade) + ",255)\"/>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

void emit_heatmap(const Eigen::MatrixXd& values, double lo, double hi,
                  const std::string& title, const std::string& path,
                  const std::string& manifest_hash, int max_cells) {
  const std::string body = render_heatmap(values, lo, hi, title, manifest_hash, max_cells);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace quanta::svg
