#pragma once

#include "fpreg/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <memory>
#include <optional>

namespace fpreg {

/// `bicgstab` is preconditioned by an incomplete LU factorization; `cg`
/// (symmetric matrices only) by the diagonal.
enum class SolverKind { automatic, direct, bicgstab, cg };

struct SolveOptions {
  SolverKind kind = SolverKind::automatic;
  /// Required relative residual ||Ax - b|| / ||b||.
  double tol = 1e-10;
  int max_iter = 2000;
  /// `automatic` picks a direct factorization below this many unknowns.
  std::size_t direct_threshold = 40000;
  /// When positive, a solver whose matrix changed (same pattern) first
  /// retries with the previous (complete or incomplete) factorization as a
  /// BiCGSTAB preconditioner, refactoring only if that takes more iterations.
  int stale_iterations = 0;
  /// Judge solutions by the normwise backward error
  /// ||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf) instead of the
  /// relative residual; meaningful for nearly singular systems.
  bool backward_error = false;
};

/// Reusable solver for a sequence of systems. A direct factorization is kept
/// until `set_matrix` is called again; the sparsity pattern analysis is kept
/// as long as the pattern is unchanged.
class LinearSolver {
 public:
  explicit LinearSolver(SolveOptions opts = {});
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  void set_matrix(const SparseOperator& a);
  bool has_matrix() const { return matrix_ != nullptr; }

  /// Solves and verifies the residual a posteriori; throws SolveFailure
  /// carrying the achieved relative residual.
  Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd* guess = nullptr);

  /// Achieved error in the measure selected by the options.
  double last_residual() const { return last_residual_; }
  int last_iterations() const { return last_iterations_; }
  /// Number of numeric factorizations performed so far.
  int factorizations() const { return factorizations_; }

  struct Direct;  // factorization state, defined in the source file
  struct Incomplete;

 private:
  bool use_direct() const;
  double error_of(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;
  Eigen::VectorXd solve_direct(const Eigen::VectorXd& b);
  std::optional<Eigen::VectorXd> solve_iterative(const Eigen::VectorXd& b, const Eigen::VectorXd* guess);
  std::optional<Eigen::VectorXd> solve_stale(const Eigen::VectorXd& b, const Eigen::VectorXd* guess);

  SolveOptions opts_;
  std::unique_ptr<SparseOperator> matrix_;
  std::unique_ptr<Direct> direct_;
  std::unique_ptr<Incomplete> incomplete_;
  bool factorized_ = false;
  bool preconditioned_ = false;
  double last_residual_ = 0.0;
  int last_iterations_ = 0;
  int factorizations_ = 0;
};

/// One-shot solve of A x = b.
Eigen::VectorXd solve_linear(const SparseOperator& a, const Eigen::VectorXd& b, const SolveOptions& opts = {});

double relative_residual(const SparseOperator& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b);
double backward_error(const SparseOperator& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b);

}  // namespace fpreg
