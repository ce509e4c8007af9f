#pragma once

#include "fpreg/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <numbers>
#include <ostream>
#include <vector>

namespace fpreg {

/// CSV with header `x,y`, one point per row.
std::vector<Vec2> read_points_csv(std::istream& in);
std::vector<Vec2> read_points_csv(const std::filesystem::path& path);
void write_points_csv(std::ostream& out, const std::vector<Vec2>& points);
void write_points_csv(const std::filesystem::path& path, const std::vector<Vec2>& points);

/// Noisy arc cloud: point i (0-based) sits at angle theta0 + dtheta * i / (n - 1)
/// on the unit circle, shifted by noise * U((0,1)^2).
struct ArcCloudParams {
  double theta0 = std::numbers::pi / 2.0;
  double dtheta = std::numbers::pi;
  std::size_t n = 141;
  double noise = 0.1;
};

std::vector<Vec2> generate_arc_cloud(const ArcCloudParams& params, std::uint64_t seed);

}  // namespace fpreg
