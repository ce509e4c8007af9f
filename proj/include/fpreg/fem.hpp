#pragma once

#include "fpreg/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace fpreg {

/// Affine element data: area, gradients of the barycentric coordinates, diameter.
struct ElementGeometry {
  double area = 0.0;
  std::array<Vec2, 3> grad_bary;
  double diameter = 0.0;
};

/// Continuous Lagrange space of degree 1 or 2 on a TriangleMesh.
///
/// Dofs are numbered vertices first, then (P2) one dof per mesh edge, so
/// `num_dofs() == num_vertices + num_edges` for P2. Local P2 ordering is
/// v0, v1, v2, e01, e12, e20.
class FeSpace {
 public:
  FeSpace(std::shared_ptr<const TriangleMesh> mesh, int degree);

  const TriangleMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriangleMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int dofs_per_cell() const { return degree_ == 1 ? 3 : 6; }
  std::size_t num_dofs() const { return dof_coords_.size(); }
  std::size_t num_cells() const { return mesh_->num_triangles(); }

  std::span<const int> cell_dofs(int t) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(t) * dofs_per_cell(),
            static_cast<std::size_t>(dofs_per_cell())};
  }
  const std::vector<Vec2>& dof_coords() const { return dof_coords_; }
  const ElementGeometry& geometry(int t) const { return geometry_[t]; }
  /// True for dofs lying on a boundary facet.
  const std::vector<bool>& boundary_dofs() const { return boundary_dofs_; }

 private:
  std::shared_ptr<const TriangleMesh> mesh_;
  int degree_;
  std::vector<int> cell_dofs_;
  std::vector<Vec2> dof_coords_;
  std::vector<ElementGeometry> geometry_;
  std::vector<bool> boundary_dofs_;
};

std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const TriangleMesh> mesh, int degree);

/// Local basis on a triangle, in the ordering documented on FeSpace.
void basis_values(int degree, const std::array<double, 3>& bary, std::span<double> out);
void basis_gradients(int degree, const std::array<double, 3>& bary, const std::array<Vec2, 3>& grad_bary,
                     std::span<Vec2> out);
/// Elementwise Laplacians; identically zero for P1, constant per cell for P2.
void basis_laplacians(int degree, const std::array<Vec2, 3>& grad_bary, std::span<double> out);

/// Coefficient vector over an FeSpace.
struct FeField {
  std::shared_ptr<const FeSpace> space;
  Eigen::VectorXd coeffs;

  FeField() = default;
  FeField(std::shared_ptr<const FeSpace> s, Eigen::VectorXd c);
  explicit FeField(std::shared_ptr<const FeSpace> s);

  const FeSpace& fe() const { return *space; }
};

/// Compressed-row sparse matrix with a symmetry flag.
struct SparseOperator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  bool symmetric = false;

  Eigen::Index rows() const { return matrix.rows(); }
};

using PointFunction = std::function<double(const Vec2&)>;

/// Nodal interpolant. Throws InterpolationFailure naming the first dof where
/// `f` is not finite.
FeField interpolate(std::shared_ptr<const FeSpace> space, const PointFunction& f);

/// Exact integral of the field (degree-appropriate quadrature).
double integrate(const FeField& field);

/// Integral of each basis function, i.e. the row sums of the mass matrix.
Eigen::VectorXd basis_integrals(const FeSpace& space);

/// Value / gradient at a located point. Throws OutsideDomain.
double evaluate(const FeField& field, const PointLocation& loc);
Vec2 evaluate_gradient(const FeField& field, const PointLocation& loc);
/// Value and gradient at once, used on hot paths.
std::pair<double, Vec2> evaluate_with_gradient(const FeField& field, const PointLocation& loc);

/// Convenience overloads that locate the point first.
double evaluate(const FeField& field, const Vec2& x);
Vec2 evaluate_gradient(const FeField& field, const Vec2& x);

/// Elementwise gradient / Laplacian of a field inside triangle t.
Vec2 cell_gradient(const FeField& field, int t, const std::array<double, 3>& bary);
double cell_laplacian(const FeField& field, int t);

/// L2 norm of the field and of (field - f), by a rule exact to degree 2*k+2.
double l2_norm(const FeField& field);
double l2_error(const FeField& field, const PointFunction& f);

SparseOperator assemble_mass(const FeSpace& space);

/// Operator L with (L rho)_i = int (grad rho + rho grad V) . grad phi_i, where
/// grad V is the elementwise gradient of the FE potential `potential`.
SparseOperator assemble_fp_form(const FeSpace& space, const FeField& potential);

/// Pure stiffness matrix (the FP form with V = 0).
SparseOperator assemble_stiffness(const FeSpace& space);

/// Brooks-Hughes upwind function coth(Pe) - 1/Pe, series-evaluated near 0.
double upwind_xi(double peclet);

/// SUPG stabilization parameter of one cell for drift magnitude `b_norm`,
/// unit diffusion and cell length scale `h`; zero when b_norm < 1e-12.
double supg_tau(double b_norm, double h);

/// SUPG contributions for drift b = -grad V with test perturbation
/// tau_K (b . grad v). Returns (S_time, S_space): S_time pairs rho with the
/// perturbation; S_space pairs the elementwise strong FP operator
/// b.grad rho + (div b) rho - lap rho with it. The cell length scale is the
/// diameter divided by the polynomial degree.
std::pair<SparseOperator, SparseOperator> assemble_supg(const FeSpace& space, const FeField& potential);

/// rho-weighted stiffness plus eps-mass: int max(rho, 0) grad u . grad v + eps u v.
SparseOperator assemble_weighted_stiffness(const FeSpace& space, const Eigen::VectorXd& weight, double eps);

/// Load vector int f v for a field f on the same space (i.e. M f).
Eigen::VectorXd mass_action(const FeSpace& space, const Eigen::VectorXd& f);

}  // namespace fpreg
