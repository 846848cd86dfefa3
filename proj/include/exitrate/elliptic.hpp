#pragma once

#include <Eigen/Sparse>

#include <functional>

#include "exitrate/grid.hpp"

namespace exitrate {

/// Negated generator on the interior nodes: L = -(b . grad + (eps/2) tr(a D2))
/// with homogeneous Dirichlet rows eliminated. M-matrix by construction:
/// off-diagonals <= 0, diagonal > 0, row sums >= 0 (strict next to the
/// boundary).
struct SparseOperator {
    Eigen::SparseMatrix<double> L;
    std::vector<int> shape;
    std::vector<double> spacing;
    double epsilon = 0.0;
};

using DriftFn = std::function<Vector(const Vector&)>;

/// Discretizes with central second differences for the diffusion block
/// (7-point mixed stencil for off-diagonal a entries) and first-order upwind
/// differences for the drift, direction chosen per node from the drift sign.
SparseOperator discretize_field(const DriftFn& drift, const DiffusionSpec& diffusion, double epsilon,
                          const OperatorGrid& grid);
/// Linear drift b(x) = M x.
SparseOperator discretize(const Matrix& M, const DiffusionSpec& diffusion, double epsilon,
                          const OperatorGrid& grid);

struct EigenPair {
    double lambda = 0.0;
    Eigen::VectorXd psi;   // strictly positive, max-norm 1
    double residual = 0.0; // ||L psi - lambda psi||_inf
    int iterations = 0;
};

/// Smallest eigenpair of L by inverse power iteration: one sparse LU
/// factorization, then repeated solves from a strictly positive start.
/// Throws SolverError on non-convergence or on a sign-violating psi.
EigenPair principal_eigenpair(const SparseOperator& op, double tol = 1e-10, int max_iter = 400);

/// Same iteration from a caller-supplied start vector (used to probe
/// eigenvalue simplicity).
EigenPair principal_eigenpair_from(const SparseOperator& op, const Eigen::VectorXd& start,
                                   double tol = 1e-10, int max_iter = 400);

/// Recomputes ||L psi - lambda psi||_inf independently of the solver path.
double verify_residual(const SparseOperator& op, const EigenPair& pair);

} // namespace exitrate
