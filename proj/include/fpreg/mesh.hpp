#pragma once

#include "fpreg/geometry.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fpreg {

enum class BoundaryTag { outer, hole };

std::string_view to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(std::string_view s);

struct BoundaryFacet {
  std::array<int, 2> vertices;
  BoundaryTag tag = BoundaryTag::outer;
};

/// Conforming triangulation of a bounded 2D domain.
///
/// Triangles are stored counter-clockwise. Local edge `e` of a triangle joins
/// local vertices `e` and `(e + 1) % 3`; `neighbors()[t][e]` is the triangle
/// across that edge or `kNoNeighbor` on the boundary. Immutable once built.
class TriangleMesh {
 public:
  static constexpr int kNoNeighbor = -1;

  TriangleMesh() = default;

  /// Builds topology and validates every invariant. Boundary facets are
  /// derived from the triangles; `facets` only supplies tags (any facet not
  /// listed is tagged outer). Throws InvalidMesh on violation.
  TriangleMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
               const std::vector<BoundaryFacet>& facets = {});

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryFacet>& boundary() const { return boundary_; }
  const std::vector<std::array<int, 3>>& neighbors() const { return neighbors_; }

  /// Unique undirected edges, endpoints sorted ascending.
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  /// Edge index of each local edge of each triangle.
  const std::vector<std::array<int, 3>>& triangle_edges() const { return triangle_edges_; }
  /// The one or two triangles incident to an edge; second is kNoNeighbor on the boundary.
  const std::vector<std::array<int, 2>>& edge_triangles() const { return edge_triangles_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  double signed_area(int t) const;
  double area() const;
  /// Longest edge of triangle t.
  double diameter(int t) const;
  double max_diameter() const;
  Vec2 centroid(int t) const;

  bool is_boundary_edge(int e) const { return edge_triangles_[e][1] == kNoNeighbor; }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }
  /// Tag of the boundary facet on edge e; only meaningful for boundary edges.
  BoundaryTag edge_tag(int e) const { return edge_tag_[e]; }
  bool has_tag(BoundaryTag tag) const;

  /// Axis-aligned bounding box of triangle t as (min, max).
  const std::array<Vec2, 2>& bbox(int t) const { return bboxes_[t]; }

 private:
  void build_topology(const std::vector<BoundaryFacet>& facets);
  void validate() const;

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryFacet> boundary_;
  std::vector<std::array<int, 3>> neighbors_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<std::array<int, 2>> edge_triangles_;
  std::vector<BoundaryTag> edge_tag_;
  std::vector<bool> boundary_vertex_;
  std::vector<std::array<Vec2, 2>> bboxes_;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

/// Rectangle minus an optional disk. A radius of 0 disables the hole.
struct RectWithHole {
  Interval x{-4.0, 4.0};
  Interval y{-4.0, 4.0};
  Vec2 hole_center{0.0, 0.0};
  double hole_radius = 0.5;
};

/// Structured triangulation of the rectangle with the disk cut out. Vertices
/// within a fraction of h of the circle are snapped onto it, cut triangles
/// are split at exact circle crossings, and interior vertices near the hole
/// get one Laplacian smoothing pass.
TriangleMesh generate_rect_with_hole(const RectWithHole& domain, double target_h);

struct PointLocation {
  /// Containing triangle, or -1 when the point is outside the domain.
  int triangle = -1;
  std::array<double, 3> barycentric{0.0, 0.0, 0.0};
  /// Closest boundary point; filled only when outside.
  Vec2 nearest_boundary{0.0, 0.0};

  bool inside() const { return triangle >= 0; }
};

/// Barycentric coordinates of x with respect to triangle t (unclamped).
std::array<double, 3> barycentric(const TriangleMesh& mesh, int t, const Vec2& x);

/// Straight walk through the neighbor table from `hint`, with an exhaustive
/// scan as fallback. Never throws; outside points yield `triangle == -1`.
PointLocation locate_point(const TriangleMesh& mesh, const Vec2& x,
                           std::optional<int> hint = std::nullopt);

/// Exhaustive scan over all triangles; the reference for locate_point.
PointLocation locate_point_exhaustive(const TriangleMesh& mesh, const Vec2& x);

/// Euclidean distance to the nearest boundary facet.
double boundary_distance(const TriangleMesh& mesh, const Vec2& x);

/// Nearest point on the boundary polygon, with the facet it lies on.
struct BoundaryProjection {
  Vec2 point;
  int facet = -1;
  double distance = 0.0;
};
BoundaryProjection nearest_boundary_point(const TriangleMesh& mesh, const Vec2& x);

}  // namespace fpreg
