#include "cardioflow/fem/sparse.hpp"

#include "cardioflow/common/error.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>

namespace cardioflow::fem {

SolverMethod parse_solver_method(const std::string& name) {
  if (name == "cg")
    return SolverMethod::cg;
  if (name == "gmres")
    return SolverMethod::gmres;
  if (name == "direct" || name == "lu")
    return SolverMethod::direct;
  throw InvalidArgument("unknown solver method '" + name + "'");
}

Eigen::VectorXd solve_linear(const SparseOperator& op, const Eigen::VectorXd& rhs, const SolveOptions& options,
                             SolveStats* stats) {
  if (op.rows() != op.cols() || op.rows() != rhs.size())
    throw InvalidArgument("solve_linear: dimension mismatch");
  if (!(options.rel_tol > 0.0 && options.rel_tol < 1.0))
    throw InvalidArgument("solve_linear: rel_tol must lie in (0, 1)");
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    if (stats)
      *stats = {0, 0.0};
    return Eigen::VectorXd::Zero(rhs.size());
  }

  Eigen::VectorXd x;
  int iterations = 0;
  switch (options.method) {
  case SolverMethod::cg: {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(options.rel_tol);
    cg.setMaxIterations(options.max_iter);
    cg.compute(op.matrix);
    x = cg.solve(rhs);
    iterations = static_cast<int>(cg.iterations());
    break;
  }
  case SolverMethod::gmres: {
    Eigen::GMRES<SparseMatrix, Eigen::DiagonalPreconditioner<double>> gmres;
    gmres.setTolerance(options.rel_tol);
    gmres.setMaxIterations(options.max_iter);
    gmres.set_restart(options.gmres_restart);
    gmres.compute(op.matrix);
    x = gmres.solve(rhs);
    iterations = static_cast<int>(gmres.iterations());
    break;
  }
  case SolverMethod::direct: {
    Eigen::SparseMatrix<double> colmajor = op.matrix;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(colmajor);
    if (lu.info() != Eigen::Success)
      throw NonConvergence("sparse LU factorization failed: " + lu.lastErrorMessage(), 0, INFINITY);
    x = lu.solve(rhs);
    iterations = 1;
    break;
  }
  }

  const double rel = (rhs - op.matrix * x).norm() / bnorm;
  if (stats)
    *stats = {iterations, rel};
  if (!std::isfinite(rel))
    throw NonConvergence("linear solve produced a non-finite solution", iterations, rel);
  // The direct solver is held to a looser round-off bound.
  const double bound = options.method == SolverMethod::direct ? std::max(options.rel_tol, 1e-8) : options.rel_tol;
  if (rel > bound * 1.0001)
    throw NonConvergence("linear solve did not converge: " + std::to_string(iterations) +
                             " iterations, relative residual " + std::to_string(rel),
                         iterations, rel);
  return x;
}

void apply_dirichlet(SparseOperator& op, Eigen::VectorXd& rhs, const std::vector<int>& dofs,
                     const std::vector<double>& values) {
  if (dofs.size() != values.size())
    throw InvalidArgument("apply_dirichlet: dofs and values differ in length");
  const Eigen::Index n = op.rows();
  std::vector<char> fixed(n, 0);
  Eigen::VectorXd known = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (dofs[i] < 0 || dofs[i] >= n)
      throw InvalidArgument("apply_dirichlet: dof out of range");
    fixed[dofs[i]] = 1;
    known[dofs[i]] = values[i];
  }
  auto& A = op.matrix;
  for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(A, r); it; ++it) {
      const auto c = it.col();
      if (fixed[r]) {
        it.valueRef() = r == c ? 1.0 : 0.0;
      } else if (fixed[c]) {
        rhs[r] -= it.value() * known[c];
        it.valueRef() = 0.0;
      }
    }
  }
  for (Eigen::Index r = 0; r < n; ++r)
    if (fixed[r]) {
      if (A.coeff(r, r) != 1.0)
        A.coeffRef(r, r) = 1.0;
      rhs[r] = known[r];
    }
  A.prune(0.0);
  A.makeCompressed();
}

} // namespace cardioflow::fem
