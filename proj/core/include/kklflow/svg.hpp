#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace kklflow::svg {

/// One polyline with optional per-point error whiskers.
struct Series {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // empty or same length as y
};

struct ChartOptions {
  std::string title;
  std::string xlabel, ylabel;
  bool log_x = false;
  bool log_y = false;
  int width = 640, height = 440;
};

/// Self-contained SVG line chart.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& opt);

struct ScatterSet {
  std::string label;
  std::string color = "#1f77b4";
  double radius = 2.5;
  Eigen::MatrixXd points;  // k x 2
};

/// Self-contained SVG scatter overlay (equal-aspect axes).
std::string scatter_plot(const std::vector<ScatterSet>& sets, const std::string& title,
                         int width = 560, int height = 560);

}  // namespace kklflow::svg
