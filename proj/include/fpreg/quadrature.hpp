#pragma once

#include <array>
#include <span>
#include <vector>

namespace fpreg {

/// Quadrature point in barycentric coordinates; weights sum to 1 and are
/// scaled by the triangle area at use sites.
struct TriQuadPoint {
  std::array<double, 3> bary;
  double weight;
};

/// Symmetric Gauss rule on the triangle exact for polynomials of total
/// degree `degree`. Available: 2 (3 pts), 4 (6 pts), 5 (7 pts), 6 (12 pts).
/// Requests in between round up.
std::span<const TriQuadPoint> triangle_rule(int degree);

/// Gauss-Legendre rule on [0, 1] with n points (1 <= n <= 4); weights sum to 1.
struct LineQuadPoint {
  double s;
  double weight;
};
std::span<const LineQuadPoint> line_rule(int n);

}  // namespace fpreg
