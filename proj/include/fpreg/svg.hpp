#pragma once

#include "fpreg/geometry.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fpreg {

/// Data-space rectangle mapped onto the plotting area.
struct PlotBox {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
};

/// Bounding box of points, padded by `pad` times its extent (degenerate
/// extents are widened to 1).
PlotBox bounding_box(const std::vector<Vec2>& points, double pad = 0.05);

/// Minimal static SVG writer. Coordinates are given in data space and
/// printed with fixed precision, so identical input yields identical bytes.
class SvgPlot {
 public:
  SvgPlot(double width, double height, PlotBox box, std::string title = {});

  void polyline(const std::vector<Vec2>& pts, const std::string& stroke, double stroke_width = 1.0);
  void points(const std::vector<Vec2>& pts, const std::string& fill, double radius = 2.0);
  void triangle(const Vec2& a, const Vec2& b, const Vec2& c, const std::string& fill);
  void circle_outline(const Vec2& center, double radius, const std::string& stroke);
  /// Frame with min/max tick labels on both axes.
  void axes(const std::string& xlabel, const std::string& ylabel);
  void legend(const std::vector<std::pair<std::string, std::string>>& entries);

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  Vec2 map(const Vec2& p) const;

  double width_, height_;
  double margin_ = 50.0;
  PlotBox box_;
  std::string title_;
  std::string body_;
};

/// Hex color from a perceptual blue-to-yellow ramp, t clamped to [0, 1].
std::string ramp_color(double t);

}  // namespace fpreg
