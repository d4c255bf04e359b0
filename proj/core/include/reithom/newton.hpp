#ifndef REITHOM_NEWTON_HPP
#define REITHOM_NEWTON_HPP

#include <functional>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "reithom/common.hpp"

namespace reithom {

enum class JacobianMode { Analytic, FiniteDifference };
enum class LinearSolverKind { Auto, DirectBanded, ConjugateGradientILU, GMRES };

struct SolveOptions {
  double tol = 1e-10;       // Euclidean residual tolerance
  int max_iter = 60;
  double armijo_slope = 1e-4;
  int max_halvings = 30;
  JacobianMode jacobian = JacobianMode::Analytic;  // FD fallback when absent
  LinearSolverKind linear_solver = LinearSolverKind::Auto;
  bool symmetric_hint = false;  // steers Auto for iterative choices
};

struct NewtonResult {
  Eigen::VectorXd solution;
  double residual_norm = 0.0;
  int iterations = 0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)>;
/// Adjusts the linearized system before the solve (e.g. pinning a dof of a
/// periodic problem whose matrix has the constants in its kernel).
using SystemFixFn = std::function<void(Eigen::SparseMatrix<double>&, Eigen::VectorXd&)>;
/// Projects a state or update back onto the constraint manifold.
using ProjectFn = std::function<void(Eigen::VectorXd&)>;

/// Sparse linear solve honoring the requested backend; Auto picks a direct
/// factorization at desk scale. Singular factorizations get one retry with a
/// 1e-12 diagonal shift.
Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                             LinearSolverKind kind, bool symmetric_hint);

/// Damped Newton iteration for monotone discrete systems: Armijo backtracking
/// on the residual Euclidean norm (halving steps), optional analytic sparse
/// Jacobian with a dense finite-difference fallback, deterministic for fixed
/// inputs. Throws ConvergenceError when the tolerance is not reached.
NewtonResult solve_monotone_system(const ResidualFn& residual, const JacobianFn& jacobian,
                                   Eigen::VectorXd init, const SolveOptions& opts,
                                   const SystemFixFn& fix_system = nullptr,
                                   const ProjectFn& project = nullptr);

}  // namespace reithom

#endif
