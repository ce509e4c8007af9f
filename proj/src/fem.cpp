#include "fpreg/fem.hpp"

#include "fpreg/error.hpp"
#include "fpreg/quadrature.hpp"

#include <cmath>

namespace fpreg {

namespace {

constexpr int kAssemblyRule = 4;  // exact for every P1/P2 form assembled below

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseOperator finish(Triplets& triplets, std::size_t n, bool symmetric) {
  SparseOperator op;
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.symmetric = symmetric;
  return op;
}

void scatter(Triplets& triplets, std::span<const int> dofs, const double* local, int n) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) triplets.emplace_back(dofs[i], dofs[j], local[i * n + j]);
}

void check_space(const FeSpace& space, const FeField& field) {
  if (field.space.get() != &space && (field.space->mesh_ptr() != space.mesh_ptr() ||
                                      field.space->degree() != space.degree()))
    throw SpaceMismatch("field lives on a different finite element space");
  if (static_cast<std::size_t>(field.coeffs.size()) != space.num_dofs())
    throw SpaceMismatch("coefficient vector length does not match the space");
}

}  // namespace

// ---------------------------------------------------------------------------
// Space

FeSpace::FeSpace(std::shared_ptr<const TriangleMesh> mesh, int degree) : mesh_(std::move(mesh)), degree_(degree) {
  if (degree != 1 && degree != 2) throw UnsupportedDegree("only P1 and P2 spaces are supported");
  const auto& m = *mesh_;
  const std::size_t nt = m.num_triangles();
  const int nloc = dofs_per_cell();
  const int nv = static_cast<int>(m.num_vertices());

  dof_coords_ = m.vertices();
  if (degree == 2)
    for (const auto& e : m.edges()) dof_coords_.push_back(0.5 * (m.vertices()[e[0]] + m.vertices()[e[1]]));

  cell_dofs_.resize(nt * nloc);
  for (std::size_t t = 0; t < nt; ++t) {
    for (int i = 0; i < 3; ++i) cell_dofs_[t * nloc + i] = m.triangles()[t][i];
    if (degree == 2)
      for (int e = 0; e < 3; ++e) cell_dofs_[t * nloc + 3 + e] = nv + m.triangle_edges()[t][e];
  }

  geometry_.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = m.triangles()[t];
    const double twice = 2.0 * m.signed_area(static_cast<int>(t));
    auto& g = geometry_[t];
    g.area = 0.5 * twice;
    g.diameter = m.diameter(static_cast<int>(t));
    for (int i = 0; i < 3; ++i) {
      const Vec2& p1 = m.vertices()[tri[(i + 1) % 3]];
      const Vec2& p2 = m.vertices()[tri[(i + 2) % 3]];
      g.grad_bary[i] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / twice;
    }
  }

  boundary_dofs_.assign(num_dofs(), false);
  for (int v = 0; v < nv; ++v) boundary_dofs_[v] = m.is_boundary_vertex(v);
  if (degree == 2)
    for (std::size_t e = 0; e < m.num_edges(); ++e)
      boundary_dofs_[nv + e] = m.is_boundary_edge(static_cast<int>(e));
}

std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const TriangleMesh> mesh, int degree) {
  return std::make_shared<const FeSpace>(std::move(mesh), degree);
}

// ---------------------------------------------------------------------------
// Basis

void basis_values(int degree, const std::array<double, 3>& l, std::span<double> out) {
  if (degree == 1) {
    out[0] = l[0], out[1] = l[1], out[2] = l[2];
    return;
  }
  for (int i = 0; i < 3; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int e = 0; e < 3; ++e) out[3 + e] = 4.0 * l[e] * l[(e + 1) % 3];
}

void basis_gradients(int degree, const std::array<double, 3>& l, const std::array<Vec2, 3>& g,
                     std::span<Vec2> out) {
  if (degree == 1) {
    out[0] = g[0], out[1] = g[1], out[2] = g[2];
    return;
  }
  for (int i = 0; i < 3; ++i) out[i] = (4.0 * l[i] - 1.0) * g[i];
  for (int e = 0; e < 3; ++e) {
    const int f = (e + 1) % 3;
    out[3 + e] = 4.0 * (l[f] * g[e] + l[e] * g[f]);
  }
}

void basis_laplacians(int degree, const std::array<Vec2, 3>& g, std::span<double> out) {
  if (degree == 1) {
    out[0] = out[1] = out[2] = 0.0;
    return;
  }
  for (int i = 0; i < 3; ++i) out[i] = 4.0 * g[i].squaredNorm();
  for (int e = 0; e < 3; ++e) out[3 + e] = 8.0 * g[e].dot(g[(e + 1) % 3]);
}

// ---------------------------------------------------------------------------
// Fields

FeField::FeField(std::shared_ptr<const FeSpace> s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c)) {
  if (static_cast<std::size_t>(coeffs.size()) != space->num_dofs())
    throw SpaceMismatch("coefficient vector length does not match the space");
}

FeField::FeField(std::shared_ptr<const FeSpace> s) : space(std::move(s)) {
  coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->num_dofs()));
}

FeField interpolate(std::shared_ptr<const FeSpace> space, const PointFunction& f) {
  const auto& coords = space->dof_coords();
  Eigen::VectorXd c(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double v = f(coords[i]);
    if (!std::isfinite(v))
      throw InterpolationFailure("non-finite value at dof " + std::to_string(i) + " (" +
                                     std::to_string(coords[i].x()) + ", " + std::to_string(coords[i].y()) + ")",
                                 static_cast<long>(i));
    c[static_cast<Eigen::Index>(i)] = v;
  }
  return FeField(std::move(space), std::move(c));
}

Eigen::VectorXd basis_integrals(const FeSpace& space) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_dofs()));
  const int n = space.dofs_per_cell();
  std::array<double, 6> phi{};
  const auto rule = triangle_rule(2 * space.degree());
  for (std::size_t t = 0; t < space.num_cells(); ++t) {
    const auto dofs = space.cell_dofs(static_cast<int>(t));
    const double area = space.geometry(static_cast<int>(t)).area;
    for (const auto& q : rule) {
      basis_values(space.degree(), q.bary, phi);
      for (int i = 0; i < n; ++i) out[dofs[i]] += q.weight * area * phi[i];
    }
  }
  return out;
}

double integrate(const FeField& field) { return basis_integrals(field.fe()).dot(field.coeffs); }

std::pair<double, Vec2> evaluate_with_gradient(const FeField& field, const PointLocation& loc) {
  if (!loc.inside()) throw OutsideDomain("point lies outside the mesh");
  const auto& space = field.fe();
  const auto dofs = space.cell_dofs(loc.triangle);
  std::array<double, 6> phi{};
  std::array<Vec2, 6> grad{};
  basis_values(space.degree(), loc.barycentric, phi);
  basis_gradients(space.degree(), loc.barycentric, space.geometry(loc.triangle).grad_bary, grad);
  double value = 0.0;
  Vec2 g = Vec2::Zero();
  for (int i = 0; i < space.dofs_per_cell(); ++i) {
    value += field.coeffs[dofs[i]] * phi[i];
    g += field.coeffs[dofs[i]] * grad[i];
  }
  return {value, g};
}

double evaluate(const FeField& field, const PointLocation& loc) { return evaluate_with_gradient(field, loc).first; }

Vec2 evaluate_gradient(const FeField& field, const PointLocation& loc) {
  return evaluate_with_gradient(field, loc).second;
}

double evaluate(const FeField& field, const Vec2& x) { return evaluate(field, locate_point(field.fe().mesh(), x)); }

Vec2 evaluate_gradient(const FeField& field, const Vec2& x) {
  return evaluate_gradient(field, locate_point(field.fe().mesh(), x));
}

Vec2 cell_gradient(const FeField& field, int t, const std::array<double, 3>& bary) {
  const auto& space = field.fe();
  std::array<Vec2, 6> grad{};
  basis_gradients(space.degree(), bary, space.geometry(t).grad_bary, grad);
  const auto dofs = space.cell_dofs(t);
  Vec2 g = Vec2::Zero();
  for (int i = 0; i < space.dofs_per_cell(); ++i) g += field.coeffs[dofs[i]] * grad[i];
  return g;
}

double cell_laplacian(const FeField& field, int t) {
  const auto& space = field.fe();
  std::array<double, 6> lap{};
  basis_laplacians(space.degree(), space.geometry(t).grad_bary, lap);
  const auto dofs = space.cell_dofs(t);
  double s = 0.0;
  for (int i = 0; i < space.dofs_per_cell(); ++i) s += field.coeffs[dofs[i]] * lap[i];
  return s;
}

double l2_error(const FeField& field, const PointFunction& f) {
  const auto& space = field.fe();
  const auto& mesh = space.mesh();
  const auto rule = triangle_rule(2 * space.degree() + 2);
  std::array<double, 6> phi{};
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_cells(); ++t) {
    const auto dofs = space.cell_dofs(static_cast<int>(t));
    const auto& tri = mesh.triangles()[t];
    const double area = space.geometry(static_cast<int>(t)).area;
    for (const auto& q : rule) {
      basis_values(space.degree(), q.bary, phi);
      double u = 0.0;
      for (int i = 0; i < space.dofs_per_cell(); ++i) u += field.coeffs[dofs[i]] * phi[i];
      if (f) {
        const Vec2 x = q.bary[0] * mesh.vertices()[tri[0]] + q.bary[1] * mesh.vertices()[tri[1]] +
                       q.bary[2] * mesh.vertices()[tri[2]];
        u -= f(x);
      }
      sum += q.weight * area * u * u;
    }
  }
  return std::sqrt(sum);
}

double l2_norm(const FeField& field) { return l2_error(field, nullptr); }

// ---------------------------------------------------------------------------
// Assembly

SparseOperator assemble_mass(const FeSpace& space) {
  const int n = space.dofs_per_cell();
  Triplets triplets;
  triplets.reserve(space.num_cells() * n * n);
  std::array<double, 6> phi{};
  std::array<double, 36> local{};
  const auto rule = triangle_rule(kAssemblyRule);
  for (std::size_t t = 0; t < space.num_cells(); ++t) {
    local.fill(0.0);
    const double area = space.geometry(static_cast<int>(t)).area;
    for (const auto& q : rule) {
      basis_values(space.degree(), q.bary, phi);
      const double w = q.weight * area;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) local[i * n + j] += w * phi[i] * phi[j];
    }
    // Mirrored so the assembled matrix is exactly symmetric.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) local[i * n + j] = local[j * n + i];
    scatter(triplets, space.cell_dofs(static_cast<int>(t)), local.data(), n);
  }
  return finish(triplets, space.num_dofs(), true);
}

namespace {

// potential == nullptr assembles the plain stiffness matrix.
SparseOperator assemble_fp_impl(const FeSpace& space, const FeField* potential) {
  const int n = space.dofs_per_cell();
  Triplets triplets;
  triplets.reserve(space.num_cells() * n * n);
  std::array<double, 6> phi{};
  std::array<Vec2, 6> grad{};
  std::array<double, 36> local{};
  const auto rule = triangle_rule(kAssemblyRule);
  const bool drift_free = potential == nullptr || potential->coeffs.isZero(0.0);
  for (std::size_t t = 0; t < space.num_cells(); ++t) {
    local.fill(0.0);
    const auto& geo = space.geometry(static_cast<int>(t));
    for (const auto& q : rule) {
      basis_values(space.degree(), q.bary, phi);
      basis_gradients(space.degree(), q.bary, geo.grad_bary, grad);
      const Vec2 gv = drift_free ? Vec2::Zero() : cell_gradient(*potential, static_cast<int>(t), q.bary);
      const double w = q.weight * geo.area;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) local[i * n + j] += w * (grad[j] + phi[j] * gv).dot(grad[i]);
    }
    scatter(triplets, space.cell_dofs(static_cast<int>(t)), local.data(), n);
  }
  return finish(triplets, space.num_dofs(), drift_free);
}

}  // namespace

SparseOperator assemble_fp_form(const FeSpace& space, const FeField& potential) {
  check_space(space, potential);
  return assemble_fp_impl(space, &potential);
}

SparseOperator assemble_stiffness(const FeSpace& space) { return assemble_fp_impl(space, nullptr); }

double upwind_xi(double pe) {
  if (std::abs(pe) < 1e-3) {
    const double p2 = pe * pe;
    return pe / 3.0 - pe * p2 / 45.0 + 2.0 * pe * p2 * p2 / 945.0;
  }
  return 1.0 / std::tanh(pe) - 1.0 / pe;
}

double supg_tau(double b_norm, double h) {
  if (b_norm < 1e-12) return 0.0;
  const double pe = 0.5 * b_norm * h;
  return h / (2.0 * b_norm) * upwind_xi(pe);
}

std::pair<SparseOperator, SparseOperator> assemble_supg(const FeSpace& space, const FeField& potential) {
  check_space(space, potential);
  const int n = space.dofs_per_cell();
  Triplets time_triplets, space_triplets;
  std::array<double, 6> phi{}, lap{};
  std::array<Vec2, 6> grad{};
  std::array<double, 36> local_time{}, local_space{};
  const auto rule = triangle_rule(kAssemblyRule);
  std::vector<Vec2> drift(rule.size());
  for (std::size_t t = 0; t < space.num_cells(); ++t) {
    const int cell = static_cast<int>(t);
    const auto& geo = space.geometry(cell);
    double mean_norm = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      drift[k] = -cell_gradient(potential, cell, rule[k].bary);
      mean_norm += rule[k].weight * drift[k].norm();
    }
    // Length scale h_K / k: with the full diameter the P2 mass-like block
    // M + S_time turns indefinite at inflow walls and Crank-Nicolson blows up.
    const double tau = supg_tau(mean_norm, geo.diameter / space.degree());
    if (tau == 0.0) continue;
    const double div_b = -cell_laplacian(potential, cell);
    basis_laplacians(space.degree(), geo.grad_bary, lap);
    local_time.fill(0.0);
    local_space.fill(0.0);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto& q = rule[k];
      basis_values(space.degree(), q.bary, phi);
      basis_gradients(space.degree(), q.bary, geo.grad_bary, grad);
      const double w = tau * q.weight * geo.area;
      for (int i = 0; i < n; ++i) {
        const double streamline = drift[k].dot(grad[i]);
        for (int j = 0; j < n; ++j) {
          local_time[i * n + j] += w * phi[j] * streamline;
          local_space[i * n + j] += w * (drift[k].dot(grad[j]) + div_b * phi[j] - lap[j]) * streamline;
        }
      }
    }
    const auto dofs = space.cell_dofs(cell);
    scatter(time_triplets, dofs, local_time.data(), n);
    scatter(space_triplets, dofs, local_space.data(), n);
  }
  return {finish(time_triplets, space.num_dofs(), false), finish(space_triplets, space.num_dofs(), false)};
}

SparseOperator assemble_weighted_stiffness(const FeSpace& space, const Eigen::VectorXd& weight, double eps) {
  const int n = space.dofs_per_cell();
  Triplets triplets;
  triplets.reserve(space.num_cells() * n * n);
  std::array<double, 6> phi{};
  std::array<Vec2, 6> grad{};
  std::array<double, 36> local{};
  const auto rule = triangle_rule(kAssemblyRule);
  for (std::size_t t = 0; t < space.num_cells(); ++t) {
    local.fill(0.0);
    const auto& geo = space.geometry(static_cast<int>(t));
    const auto dofs = space.cell_dofs(static_cast<int>(t));
    for (const auto& q : rule) {
      basis_values(space.degree(), q.bary, phi);
      basis_gradients(space.degree(), q.bary, geo.grad_bary, grad);
      double rho = 0.0;
      for (int i = 0; i < n; ++i) rho += weight[dofs[i]] * phi[i];
      rho = std::max(rho, 0.0);
      const double w = q.weight * geo.area;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) local[i * n + j] += w * (rho * grad[j].dot(grad[i]) + eps * phi[j] * phi[i]);
    }
    scatter(triplets, dofs, local.data(), n);
  }
  return finish(triplets, space.num_dofs(), true);
}

Eigen::VectorXd mass_action(const FeSpace& space, const Eigen::VectorXd& f) {
  return assemble_mass(space).matrix * f;
}

}  // namespace fpreg
