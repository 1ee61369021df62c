#pragma once

// Minimal dependency-free SVG line plots: axes, ticks, polylines, legend.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace poselab::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotStyle {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool unit_box = false;  // fix both axes to [0, 1]
};

void write_line_plot(std::ostream& out, const PlotStyle& style, std::span<const Series> series);

}  // namespace poselab::svg
