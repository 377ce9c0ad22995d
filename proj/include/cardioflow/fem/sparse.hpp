#pragma once

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace cardioflow::fem {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

/// Compressed-row sparse operator.
struct SparseOperator {
  SparseMatrix matrix;
  bool symmetric = false;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

enum class SolverMethod { cg, gmres, direct };

SolverMethod parse_solver_method(const std::string& name);

struct SolveOptions {
  SolverMethod method = SolverMethod::cg;
  double rel_tol = 1e-10;
  int max_iter = 10000;
  int gmres_restart = 200;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves op * x = rhs with Jacobi-preconditioned CG/GMRES or sparse LU.
/// Guarantees |rhs - op x| <= rel_tol |rhs| for the iterative methods and
/// throws NonConvergence otherwise.
Eigen::VectorXd solve_linear(const SparseOperator& op, const Eigen::VectorXd& rhs, const SolveOptions& options,
                             SolveStats* stats = nullptr);

/// Imposes x[dofs[i]] = values[i] by symmetric elimination: rows and columns
/// of the constrained dofs are replaced by the identity and the known values
/// moved to the right-hand side.
void apply_dirichlet(SparseOperator& op, Eigen::VectorXd& rhs, const std::vector<int>& dofs,
                     const std::vector<double>& values);

} // namespace cardioflow::fem
