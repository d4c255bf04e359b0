#include "reithom/newton.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

namespace reithom {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

Eigen::VectorXd direct_solve(SpMat A, const Eigen::VectorXd& b) {
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    // One regularized retry with a tiny diagonal shift.
    SpMat shifted = A;
    for (int i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) += 1e-12;
    lu.factorize(shifted);
    if (lu.info() != Eigen::Success)
      throw ConvergenceError("linear solve failed: singular Jacobian", 0.0, 0);
  }
  return lu.solve(b);
}

}  // namespace

Eigen::VectorXd solve_linear(const SpMat& A, const Eigen::VectorXd& b, LinearSolverKind kind,
                             bool symmetric_hint) {
  switch (kind) {
    case LinearSolverKind::DirectBanded:
      return direct_solve(A, b);
    case LinearSolverKind::ConjugateGradientILU: {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                               Eigen::IncompleteCholesky<double>>
          cg;
      cg.setTolerance(1e-13);
      cg.setMaxIterations(4 * A.rows());
      cg.compute(A);
      Eigen::VectorXd x = cg.solve(b);
      if (cg.info() == Eigen::Success) return x;
      return direct_solve(A, b);  // direct fallback
    }
    case LinearSolverKind::GMRES: {
      Eigen::GMRES<SpMat, Eigen::IncompleteLUT<double>> gm;
      gm.setTolerance(1e-13);
      gm.setMaxIterations(4 * A.rows());
      gm.compute(A);
      Eigen::VectorXd x = gm.solve(b);
      if (gm.info() == Eigen::Success) return x;
      return direct_solve(A, b);
    }
    case LinearSolverKind::Auto:
    default:
      if (A.rows() < 20000 || !symmetric_hint) return direct_solve(A, b);
      return solve_linear(A, b, LinearSolverKind::ConjugateGradientILU, true);
  }
}

namespace {

SpMat finite_difference_jacobian(const ResidualFn& residual, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r0) {
  const auto n = x.size();
  Eigen::MatrixXd dense(n, n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = std::max(1e-7, 1e-7 * std::abs(x[j]));
    xp[j] = x[j] + step;
    const Eigen::VectorXd rp = residual(xp);
    xp[j] = x[j] - step;
    const Eigen::VectorXd rm = residual(xp);
    xp[j] = x[j];
    dense.col(j) = (rp - rm) / (2.0 * step);
  }
  (void)r0;
  return dense.sparseView(1.0, 1e-300);
}

}  // namespace

NewtonResult solve_monotone_system(const ResidualFn& residual, const JacobianFn& jacobian,
                                   Eigen::VectorXd init, const SolveOptions& opts,
                                   const SystemFixFn& fix_system, const ProjectFn& project) {
  detail::require(opts.tol > 0.0, "solver tolerance must be positive");
  detail::require(opts.max_iter >= 1, "max_iter must be at least 1");
  detail::require(init.allFinite(), "initial guess must be finite");

  Eigen::VectorXd x = std::move(init);
  if (project) project(x);
  Eigen::VectorXd r = residual(x);
  double rn = r.norm();

  const bool use_fd =
      !jacobian || opts.jacobian == JacobianMode::FiniteDifference;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (rn <= opts.tol) return {std::move(x), rn, iter};

    SpMat J = use_fd ? finite_difference_jacobian(residual, x, r) : jacobian(x);
    Eigen::VectorXd rhs = -r;
    if (fix_system) fix_system(J, rhs);
    Eigen::VectorXd delta = solve_linear(J, rhs, opts.linear_solver, opts.symmetric_hint);
    if (project) project(delta);
    if (!delta.allFinite())
      throw ConvergenceError("Newton update is not finite", rn, iter);

    // Armijo backtracking on the residual norm.
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_try, r_try;
    double rn_try = 0.0;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      x_try = x + step * delta;
      r_try = residual(x_try);
      rn_try = r_try.norm();
      if (rn_try <= (1.0 - opts.armijo_slope * step) * rn) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "Newton line search stalled at residual " << rn;
      throw ConvergenceError(os.str(), rn, iter);
    }
    x.swap(x_try);
    r.swap(r_try);
    rn = rn_try;
  }
  if (rn <= opts.tol) return {std::move(x), rn, opts.max_iter};
  std::ostringstream os;
  os << "Newton failed to reach tol " << opts.tol << " in " << opts.max_iter
     << " iterations (residual " << rn << ")";
  throw ConvergenceError(os.str(), rn, opts.max_iter);
}

}  // namespace reithom
