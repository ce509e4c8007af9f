#include "fpreg/linear_solver.hpp"

#include "fpreg/error.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <limits>
#include <sstream>

namespace fpreg {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

struct LinearSolver::Direct {
  ColMatrix matrix;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  Eigen::SimplicialLDLT<ColMatrix> ldlt;
  bool lu_analyzed = false;
  bool ldlt_analyzed = false;
  bool use_ldlt = false;
  bool has_factor = false;
  Eigen::Index nnz = -1;

  Eigen::VectorXd apply(const Eigen::VectorXd& rhs) const {
    return use_ldlt ? Eigen::VectorXd(ldlt.solve(rhs)) : Eigen::VectorXd(lu.solve(rhs));
  }
};

struct LinearSolver::Incomplete {
  Eigen::IncompleteLUT<double> ilu;
  bool has_factor = false;
  Eigen::Index nnz = -1;

  Eigen::VectorXd apply(const Eigen::VectorXd& rhs) const { return ilu.solve(rhs); }
};

namespace {

// Preconditioner backed by a (possibly incomplete) factorization of a nearby
// matrix, owned elsewhere.
template <class Backend>
class FactorPreconditioner {
 public:
  FactorPreconditioner() = default;
  void set(const Backend* d) { d_ = d; }
  template <class M>
  FactorPreconditioner& analyzePattern(const M&) { return *this; }
  template <class M>
  FactorPreconditioner& factorize(const M&) { return *this; }
  template <class M>
  FactorPreconditioner& compute(const M&) { return *this; }
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const { return d_->apply(r); }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  const Backend* d_ = nullptr;
};

template <class Backend>
std::optional<Eigen::VectorXd> preconditioned_bicgstab(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a,
                                                       const Backend& pre, const Eigen::VectorXd& b,
                                                       const Eigen::VectorXd* guess, double tol, int max_iter,
                                                       int& iterations) {
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, FactorPreconditioner<Backend>> bicg;
  bicg.setTolerance(tol);
  bicg.setMaxIterations(max_iter);
  bicg.compute(a);
  bicg.preconditioner().set(&pre);
  Eigen::VectorXd x = guess ? Eigen::VectorXd(bicg.solveWithGuess(b, *guess)) : Eigen::VectorXd(bicg.solve(b));
  iterations = static_cast<int>(bicg.iterations());
  if (!x.allFinite()) return std::nullopt;
  return x;
}

}  // namespace

LinearSolver::LinearSolver(SolveOptions opts) : opts_(opts) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

double relative_residual(const SparseOperator& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double bn = b.norm();
  const double rn = (a.matrix * x - b).norm();
  return bn > 0.0 ? rn / bn : rn;
}

double backward_error(const SparseOperator& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  double a_norm = 0.0;
  for (Eigen::Index r = 0; r < a.matrix.outerSize(); ++r) {
    double row = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a.matrix, r); it; ++it) row += std::abs(it.value());
    a_norm = std::max(a_norm, row);
  }
  const double denom = a_norm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  const double rn = (a.matrix * x - b).lpNorm<Eigen::Infinity>();
  return denom > 0.0 ? rn / denom : rn;
}

double LinearSolver::error_of(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
  return opts_.backward_error ? backward_error(*matrix_, x, b) : relative_residual(*matrix_, x, b);
}

bool LinearSolver::use_direct() const {
  switch (opts_.kind) {
    case SolverKind::direct: return true;
    case SolverKind::automatic: return static_cast<std::size_t>(matrix_->rows()) <= opts_.direct_threshold;
    default: return false;
  }
}

void LinearSolver::set_matrix(const SparseOperator& a) {
  if (a.matrix.rows() != a.matrix.cols()) throw SolveFailure("matrix is not square", 0.0);
  matrix_ = std::make_unique<SparseOperator>(a);
  factorized_ = false;
  preconditioned_ = false;
}

Eigen::VectorXd LinearSolver::solve_direct(const Eigen::VectorXd& b) {
  if (!direct_) direct_ = std::make_unique<Direct>();
  auto& d = *direct_;
  if (!factorized_) {
    d.matrix = matrix_->matrix;
    d.matrix.makeCompressed();
    if (d.nnz != d.matrix.nonZeros()) d.lu_analyzed = d.ldlt_analyzed = false;
    d.nnz = d.matrix.nonZeros();
    d.use_ldlt = matrix_->symmetric;
    d.has_factor = false;
    ++factorizations_;
    if (d.use_ldlt) {
      if (!d.ldlt_analyzed) d.ldlt.analyzePattern(d.matrix);
      d.ldlt_analyzed = true;
      d.ldlt.factorize(d.matrix);
      // Indefinite or singular pivots: fall back to LU.
      if (d.ldlt.info() != Eigen::Success) d.use_ldlt = false;
    }
    if (!d.use_ldlt) {
      if (!d.lu_analyzed) d.lu.analyzePattern(d.matrix);
      d.lu_analyzed = true;
      d.lu.factorize(d.matrix);
      if (d.lu.info() != Eigen::Success)
        throw SolveFailure("sparse LU factorization failed: " + d.lu.lastErrorMessage(),
                           std::numeric_limits<double>::infinity());
    }
    d.has_factor = true;
    factorized_ = true;
  }
  auto apply = [&](const Eigen::VectorXd& rhs) { return d.apply(rhs); };
  auto refine = [&]() {
    Eigen::VectorXd x = apply(b);
    // A few rounds of iterative refinement recover accuracy on ill-conditioned systems.
    for (int round = 0; round < 3; ++round) {
      if (error_of(x, b) <= opts_.tol) break;
      x += apply(b - matrix_->matrix * x);
    }
    return x;
  };
  Eigen::VectorXd x = refine();
  if (d.use_ldlt && !(error_of(x, b) <= opts_.tol)) {
    // LDLT without pivoting can lose accuracy on indefinite matrices.
    if (!d.lu_analyzed) d.lu.analyzePattern(d.matrix);
    d.lu_analyzed = true;
    d.lu.factorize(d.matrix);
    if (d.lu.info() != Eigen::Success)
      throw SolveFailure("sparse LU factorization failed: " + d.lu.lastErrorMessage(),
                         std::numeric_limits<double>::infinity());
    d.use_ldlt = false;
    ++factorizations_;
    x = refine();
  }
  return x;
}

std::optional<Eigen::VectorXd> LinearSolver::solve_iterative(const Eigen::VectorXd& b, const Eigen::VectorXd* guess) {
  const auto& a = matrix_->matrix;
  // Iterate slightly below the target so the a posteriori check passes.
  const double tol = 0.5 * opts_.tol;
  if (matrix_->symmetric && opts_.kind == SolverKind::cg) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(opts_.max_iter);
    cg.compute(a);
    Eigen::VectorXd x = guess ? Eigen::VectorXd(cg.solveWithGuess(b, *guess)) : Eigen::VectorXd(cg.solve(b));
    last_iterations_ = static_cast<int>(cg.iterations());
    if (!x.allFinite() || error_of(x, b) > opts_.tol) return std::nullopt;
    return x;
  }
  if (!incomplete_) incomplete_ = std::make_unique<Incomplete>();
  auto& p = *incomplete_;
  auto attempt = [&](int max_iter) -> std::optional<Eigen::VectorXd> {
    auto x = preconditioned_bicgstab(a, p, b, guess, tol, max_iter, last_iterations_);
    if (!x || error_of(*x, b) > opts_.tol) return std::nullopt;
    return x;
  };
  if (!preconditioned_ && p.has_factor && p.nnz == a.nonZeros() && opts_.stale_iterations > 0) {
    if (auto x = attempt(opts_.stale_iterations)) return x;
  }
  if (!preconditioned_) {
    p.ilu.setDroptol(1e-4);
    p.ilu.setFillfactor(10);
    p.ilu.compute(a);
    ++factorizations_;
    p.has_factor = p.ilu.info() == Eigen::Success;
    p.nnz = a.nonZeros();
    preconditioned_ = true;
    if (!p.has_factor) return std::nullopt;
  }
  return attempt(opts_.max_iter);
}

std::optional<Eigen::VectorXd> LinearSolver::solve_stale(const Eigen::VectorXd& b, const Eigen::VectorXd* guess) {
  if (opts_.stale_iterations <= 0 || !direct_ || !direct_->has_factor ||
      direct_->nnz != matrix_->matrix.nonZeros())
    return std::nullopt;
  auto x = preconditioned_bicgstab(matrix_->matrix, *direct_, b, guess, 0.5 * opts_.tol, opts_.stale_iterations,
                                   last_iterations_);
  if (!x || error_of(*x, b) > opts_.tol) return std::nullopt;
  return x;
}

Eigen::VectorXd LinearSolver::solve(const Eigen::VectorXd& b, const Eigen::VectorXd* guess) {
  if (!matrix_) throw SolveFailure("no matrix set", 0.0);
  if (b.size() != matrix_->rows()) throw SolveFailure("right-hand side has the wrong length", 0.0);
  if (b.isZero(0.0)) {
    last_residual_ = 0.0;
    return Eigen::VectorXd::Zero(b.size());
  }
  Eigen::VectorXd x;
  if (use_direct()) {
    std::optional<Eigen::VectorXd> stale;
    if (!factorized_) stale = solve_stale(b, guess);
    if (stale) {
      x = std::move(*stale);
    } else {
      x = solve_direct(b);
      last_iterations_ = 0;
    }
  } else if (auto it = solve_iterative(b, guess)) {
    x = std::move(*it);
  } else if (opts_.kind == SolverKind::automatic) {
    // Krylov stagnation: fall back to a factorization for this matrix.
    x = solve_direct(b);
    last_iterations_ = 0;
  } else {
    x = Eigen::VectorXd::Zero(b.size());
  }
  last_residual_ = error_of(x, b);
  if (!x.allFinite() || !(last_residual_ <= opts_.tol)) {
    std::ostringstream msg;
    msg << "linear solve reached " << (opts_.backward_error ? "backward error " : "relative residual ")
        << last_residual_ << " > " << opts_.tol;
    throw SolveFailure(msg.str(), last_residual_);
  }
  return x;
}

Eigen::VectorXd solve_linear(const SparseOperator& a, const Eigen::VectorXd& b, const SolveOptions& opts) {
  LinearSolver solver(opts);
  solver.set_matrix(a);
  return solver.solve(b);
}

}  // namespace fpreg
