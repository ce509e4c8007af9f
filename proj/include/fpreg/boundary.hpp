#pragma once

#include "fpreg/density.hpp"
#include "fpreg/fem.hpp"
#include "fpreg/linear_solver.hpp"

namespace fpreg {

struct SmootherParams {
  double delta = 1e-2;
  double tol = 1e-2;
  double sigma_beta = 10.0;
  /// Degree entering beta_j = sigma_beta kappa^2 / |F_j|; 0 takes the space degree.
  int kappa = 0;
};

/// Nodal interpolant of max(dist(x, boundary), tol).
FeField raw_distance_field(std::shared_ptr<const FeSpace> space, double tol);

/// Interior-penalty bilinear form of the smoother, before boundary conditions:
/// sum_K int (lap w lap v + w v / delta) + sum_F int (beta [grad w].[grad v]
/// + {lap w}{lap v} / beta) over interior facets F.
SparseOperator assemble_smoother(const FeSpace& space, const SmootherParams& params);

/// Solves the smoothing problem with right-hand side (1/delta) int w v and
/// w_delta = tol strongly on boundary dofs. P2 only.
FeField smooth_distance(const FeField& w, const SmootherParams& params, const SolveOptions& solver = {});

/// sum over interior facets of || [grad w] ||^2_{L2(F)}.
double gradient_jump_seminorm(const FeField& w);

/// V = interpolant of -log rho_inf plus eps / w_delta added nodally. Throws
/// InvalidDistanceField if some w_delta dof is not positive.
FeField regularized_potential(const Gmm& rho_inf, const FeField& w_delta, double eps);

}  // namespace fpreg
