#include "fpreg/boundary.hpp"

#include "fpreg/error.hpp"
#include "fpreg/quadrature.hpp"

#include <cmath>

namespace fpreg {

FeField raw_distance_field(std::shared_ptr<const FeSpace> space, double tol) {
  const TriangleMesh& mesh = space->mesh();
  return interpolate(std::move(space), [&](const Vec2& x) { return std::max(boundary_distance(mesh, x), tol); });
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

template <class F>
void for_each_interior_facet(const FeSpace& space, F&& f) {
  const auto& mesh = space.mesh();
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.is_boundary_edge(static_cast<int>(e))) continue;
    f(static_cast<int>(e), mesh.edge_triangles()[e]);
  }
}

}  // namespace

SparseOperator assemble_smoother(const FeSpace& space, const SmootherParams& params) {
  if (space.degree() < 2)
    throw UnsupportedDegree("the smoother needs a P2 space: elementwise Laplacians vanish for P1");
  if (!(params.delta > 0.0) || !(params.tol > 0.0) || !(params.sigma_beta > 0.0))
    throw InvalidArgument("smoother parameters must be positive");
  const auto& mesh = space.mesh();
  const int n = space.dofs_per_cell();
  const int kappa = params.kappa > 0 ? params.kappa : space.degree();
  Triplets triplets;
  std::array<double, 6> phi{}, lap{};
  std::array<double, 36> local{};

  // Cell terms: lap w lap v + w v / delta.
  const auto rule = triangle_rule(2 * space.degree());
  for (std::size_t t = 0; t < space.num_cells(); ++t) {
    const auto& geo = space.geometry(static_cast<int>(t));
    basis_laplacians(space.degree(), geo.grad_bary, lap);
    local.fill(0.0);
    for (const auto& q : rule) {
      basis_values(space.degree(), q.bary, phi);
      const double w = q.weight * geo.area;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) local[i * n + j] += w * (lap[i] * lap[j] + phi[i] * phi[j] / params.delta);
    }
    const auto dofs = space.cell_dofs(static_cast<int>(t));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) triplets.emplace_back(dofs[i], dofs[j], local[i * n + j]);
  }

  // Facet terms. This is the penalty-plus-average form, without the
  // {lap w}[grad v . n] consistency terms of the usual C0-IP method.
  const auto line = line_rule(3);
  std::array<Vec2, 6> grad_a{}, grad_b{};
  std::array<double, 6> lap_a{}, lap_b{};
  for_each_interior_facet(space, [&](int e, const std::array<int, 2>& cells) {
    const auto& ev = mesh.edges()[e];
    const Vec2& p0 = mesh.vertices()[ev[0]];
    const Vec2& p1 = mesh.vertices()[ev[1]];
    const double len = (p1 - p0).norm();
    const double beta = params.sigma_beta * kappa * kappa / len;
    const int ta = cells[0], tb = cells[1];
    const auto dofs_a = space.cell_dofs(ta);
    const auto dofs_b = space.cell_dofs(tb);
    basis_laplacians(space.degree(), space.geometry(ta).grad_bary, lap_a);
    basis_laplacians(space.degree(), space.geometry(tb).grad_bary, lap_b);
    // Combined local numbering: 0..n-1 on side a, n..2n-1 on side b.
    std::array<int, 12> dofs{};
    for (int i = 0; i < n; ++i) dofs[i] = dofs_a[i], dofs[n + i] = dofs_b[i];
    std::array<Vec2, 12> jump{};
    std::array<double, 12> avg{};
    std::array<double, 144> facet{};
    for (int i = 0; i < n; ++i) avg[i] = 0.5 * lap_a[i], avg[n + i] = 0.5 * lap_b[i];
    for (const auto& q : line) {
      const Vec2 x = (1.0 - q.s) * p0 + q.s * p1;
      basis_gradients(space.degree(), barycentric(mesh, ta, x), space.geometry(ta).grad_bary, grad_a);
      basis_gradients(space.degree(), barycentric(mesh, tb, x), space.geometry(tb).grad_bary, grad_b);
      for (int i = 0; i < n; ++i) jump[i] = grad_a[i], jump[n + i] = -grad_b[i];
      const double w = q.weight * len;
      for (int i = 0; i < 2 * n; ++i)
        for (int j = 0; j < 2 * n; ++j)
          facet[i * 2 * n + j] += w * (beta * jump[i].dot(jump[j]) + avg[i] * avg[j] / beta);
    }
    for (int i = 0; i < 2 * n; ++i)
      for (int j = 0; j < 2 * n; ++j) triplets.emplace_back(dofs[i], dofs[j], facet[i * 2 * n + j]);
  });

  SparseOperator op;
  const auto nd = static_cast<Eigen::Index>(space.num_dofs());
  op.matrix.resize(nd, nd);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.symmetric = true;
  return op;
}

FeField smooth_distance(const FeField& w, const SmootherParams& params, const SolveOptions& solver) {
  const auto& space = w.fe();
  const SparseOperator a = assemble_smoother(space, params);
  Eigen::VectorXd rhs = mass_action(space, w.coeffs) / params.delta;

  const auto& bd = space.boundary_dofs();
  const auto nd = static_cast<Eigen::Index>(space.num_dofs());
  Eigen::VectorXd lifted = Eigen::VectorXd::Zero(nd);
  for (Eigen::Index i = 0; i < nd; ++i)
    if (bd[i]) lifted[i] = params.tol;
  rhs -= a.matrix * lifted;

  // Eliminate boundary rows and columns, keeping a unit diagonal.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.matrix.nonZeros()));
  for (Eigen::Index r = 0; r < nd; ++r) {
    if (bd[r]) {
      triplets.emplace_back(r, r, 1.0);
      continue;
    }
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a.matrix, r); it; ++it)
      if (!bd[it.col()]) triplets.emplace_back(r, it.col(), it.value());
  }
  for (Eigen::Index i = 0; i < nd; ++i)
    if (bd[i]) rhs[i] = params.tol;
  SparseOperator reduced;
  reduced.matrix.resize(nd, nd);
  reduced.matrix.setFromTriplets(triplets.begin(), triplets.end());
  reduced.symmetric = true;

  Eigen::VectorXd x = solve_linear(reduced, rhs, solver);
  for (Eigen::Index i = 0; i < nd; ++i)
    if (bd[i]) x[i] = params.tol;
  return FeField(w.space, std::move(x));
}

double gradient_jump_seminorm(const FeField& w) {
  const auto& space = w.fe();
  const auto& mesh = space.mesh();
  const auto line = line_rule(3);
  double sum = 0.0;
  for_each_interior_facet(space, [&](int e, const std::array<int, 2>& cells) {
    const auto& ev = mesh.edges()[e];
    const Vec2& p0 = mesh.vertices()[ev[0]];
    const Vec2& p1 = mesh.vertices()[ev[1]];
    const double len = (p1 - p0).norm();
    for (const auto& q : line) {
      const Vec2 x = (1.0 - q.s) * p0 + q.s * p1;
      const Vec2 jump = cell_gradient(w, cells[0], barycentric(mesh, cells[0], x)) -
                        cell_gradient(w, cells[1], barycentric(mesh, cells[1], x));
      sum += q.weight * len * jump.squaredNorm();
    }
  });
  return sum;
}

FeField regularized_potential(const Gmm& rho_inf, const FeField& w_delta, double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be nonnegative");
  for (Eigen::Index i = 0; i < w_delta.coeffs.size(); ++i)
    if (!(w_delta.coeffs[i] > 0.0))
      throw InvalidDistanceField("distance field is not positive at dof " + std::to_string(i));
  FeField v = interpolate(w_delta.space, [&](const Vec2& x) { return -gmm_logpdf(rho_inf, x); });
  if (eps > 0.0) v.coeffs += eps * w_delta.coeffs.cwiseInverse();
  return v;
}

}  // namespace fpreg
