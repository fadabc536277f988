#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace quanta::svg {

enum class AxisScale { Linear, Log };

struct Series {
  std::string label;  // empty: excluded from the legend
  std::vector<std::pair<double, double>> points;
  std::string color;  // empty: palette color by series index
  double stroke_width = 1.5;
  bool markers = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  AxisScale x_scale = AxisScale::Linear;
  AxisScale y_scale = AxisScale::Linear;
  std::vector<Series> series;
  int width_px = 760;
  int height_px = 520;
  std::string manifest_hash;  // embedded as a comment when nonempty
};

// Deterministic standalone SVG with axes, ticks, and a legend. Throws on
// nonfinite coordinates or nonpositive values on a log axis.
std::string render_svg(const PlotSpec& spec);
void emit_svg(const PlotSpec& spec, const std::string& path);

// Downsampled matrix heatmap (used for block-ordered similarity matrices).
std::string render_heatmap(const Eigen::MatrixXd& values, double lo, double hi,
                           const std::string& title,
                           const std::string& manifest_hash = "",
                           int max_cells = 256);
void emit_heatmap(const Eigen::MatrixXd& values, double lo, double hi,
                  const std::string& title, const std::string& path,
                  const std::string& manifest_hash = "", int max_cells = 256);

}  // namespace quanta::svg
