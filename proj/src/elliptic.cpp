#include "exitrate/elliptic.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace exitrate {

namespace {

using Triplet = Eigen::Triplet<double>;

// Accumulates a stencil entry: interior neighbors become matrix entries,
// Dirichlet neighbors are dropped (value 0 on the boundary).
struct RowAccumulator {
    std::vector<Triplet>* triplets;
    const OperatorGrid* grid;
    std::int64_t row;

    void add(std::int64_t flat_col, double generator_coeff) {
        if (flat_col < 0) return;
        const std::int64_t col = grid->interior_ordinal(flat_col);
        if (col < 0) return;
        // L = -G, so generator coefficients enter negated.
        triplets->emplace_back(static_cast<int>(row), static_cast<int>(col), -generator_coeff);
    }
};

} // namespace

SparseOperator discretize_field(const DriftFn& drift, const DiffusionSpec& diffusion, double epsilon,
                          const OperatorGrid& grid) {
    if (!(epsilon > 0.0)) {
        throw PreconditionError("discretize requires epsilon > 0");
    }
    if (diffusion.dim() != grid.dim()) {
        throw DimensionError("diffusion dimension does not match the grid");
    }
    const int d = grid.dim();
    const std::int64_t m = grid.interior_count();
    const bool constant_a = diffusion.modulation().kind == ModulationKind::Constant;
    const Matrix a_const = epsilon * diffusion.base_aat();

    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(m) * (2 * d + 1 + 2 * d * (d - 1)));

    for (std::int64_t k = 0; k < m; ++k) {
        const std::int64_t flat = grid.interior_flat(k);
        const Vector x = grid.coords(flat);
        const Vector b = drift(x);
        if (!b.allFinite()) {
            throw NumericError("drift evaluated to a non-finite value at an interior node");
        }
        // eps * a(x); the 1/2 in the generator is folded into the stencils.
        const Matrix ea = constant_a ? a_const : Matrix(epsilon * diffusion.a(x));

        RowAccumulator row{&triplets, &grid, k};
        double center = 0.0;

        for (int j = 0; j < d; ++j) {
            const double h_j = grid.spacing(j);
            const std::int64_t up = grid.neighbor(flat, j, +1);
            const std::int64_t dn = grid.neighbor(flat, j, -1);

            // Axial diffusion: (eps/2) a_jj u'' by central second differences.
            const double c = 0.5 * ea(j, j) / (h_j * h_j);
            row.add(up, c);
            row.add(dn, c);
            center += -2.0 * c;

            // Drift: first-order upwind, one-sided against the flow.
            const double bj = b[j];
            if (bj > 0.0) {
                row.add(up, bj / h_j);
                center += -bj / h_j;
            } else if (bj < 0.0) {
                row.add(dn, -bj / h_j);
                center += bj / h_j;
            }

            // Mixed second derivatives: seven-point stencil oriented by the
            // sign of a_jk to keep the corner weights nonnegative.
            for (int l = j + 1; l < d; ++l) {
                const double a_jl = ea(j, l);
                if (a_jl == 0.0) continue;
                const double h_l = grid.spacing(l);
                const double q = std::abs(a_jl) / (2.0 * h_j * h_l);
                const std::int64_t up_l = grid.neighbor(flat, l, +1);
                const std::int64_t dn_l = grid.neighbor(flat, l, -1);
                if (a_jl > 0.0) {
                    row.add(grid.neighbor(up, l, +1), q);
                    row.add(grid.neighbor(dn, l, -1), q);
                } else {
                    row.add(grid.neighbor(up, l, -1), q);
                    row.add(grid.neighbor(dn, l, +1), q);
                }
                row.add(up, -q);
                row.add(dn, -q);
                row.add(up_l, -q);
                row.add(dn_l, -q);
                center += 2.0 * q;
            }
        }
        triplets.emplace_back(static_cast<int>(k), static_cast<int>(k), -center);
    }

    SparseOperator op;
    op.L.resize(static_cast<int>(m), static_cast<int>(m));
    op.L.setFromTriplets(triplets.begin(), triplets.end());
    op.L.makeCompressed();
    op.shape = grid.shape();
    op.spacing = grid.spacing();
    op.epsilon = epsilon;

    // Sign audit: L must be an M-matrix for the Perron structure downstream.
    std::vector<std::int64_t> bad_rows;
    for (int col = 0; col < op.L.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.L, col); it; ++it) {
            if (it.row() == it.col()) {
                if (!(it.value() > 0.0)) bad_rows.push_back(it.row());
            } else if (it.value() > 1e-13 * std::abs(op.L.coeff(it.row(), it.row()))) {
                bad_rows.push_back(it.row());
            }
        }
    }
    if (!bad_rows.empty()) {
        std::sort(bad_rows.begin(), bad_rows.end());
        bad_rows.erase(std::unique(bad_rows.begin(), bad_rows.end()), bad_rows.end());
        std::string msg = "discrete operator lost its sign structure at " +
                          std::to_string(bad_rows.size()) +
                          " interior nodes; refine the grid or use a (more) diagonal "
                          "noise matrix. First nodes:";
        for (std::size_t i = 0; i < bad_rows.size() && i < 8; ++i) {
            msg += " " + std::to_string(bad_rows[i]);
        }
        throw StencilError(msg, std::move(bad_rows));
    }
    return op;
}

SparseOperator discretize(const Matrix& M, const DiffusionSpec& diffusion, double epsilon,
                          const OperatorGrid& grid) {
    if (M.rows() != grid.dim() || M.cols() != grid.dim()) {
        throw DimensionError("drift matrix does not match the grid dimension");
    }
    return discretize_field([&M](const Vector& x) { return Vector(M * x); }, diffusion, epsilon, grid);
}

namespace {

double rayleigh_quotient(const Eigen::SparseMatrix<double>& L, const Eigen::VectorXd& v) {
    return v.dot(L * v) / v.squaredNorm();
}

double inf_residual(const Eigen::SparseMatrix<double>& L, const Eigen::VectorXd& v, double lambda) {
    return (L * v - lambda * v).lpNorm<Eigen::Infinity>();
}

// Attainable floating-point floor for ||L v - lambda v||_inf.
double residual_floor(const Eigen::SparseMatrix<double>& L, const Eigen::VectorXd& v) {
    Eigen::VectorXd av = Eigen::VectorXd::Zero(v.size());
    for (int col = 0; col < L.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(L, col); it; ++it) {
            av[it.row()] += std::abs(it.value()) * std::abs(v[it.col()]);
        }
    }
    return 64.0 * std::numeric_limits<double>::epsilon() * av.maxCoeff();
}

} // namespace

EigenPair principal_eigenpair_from(const SparseOperator& op, const Eigen::VectorXd& start,
                                   double tol, int max_iter) {
    const Eigen::Index m = op.L.rows();
    if (start.size() != m) {
        throw DimensionError("start vector does not match the operator size");
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(op.L);
    lu.factorize(op.L);
    if (lu.info() != Eigen::Success) {
        throw SolverError("sparse LU factorization of the discrete operator failed");
    }

    Eigen::VectorXd v = start;
    {
        const double vmax = v.cwiseAbs().maxCoeff();
        if (!(vmax > 0.0)) throw PreconditionError("start vector must be nonzero");
        v /= vmax;
    }

    double lambda_prev = std::numeric_limits<double>::quiet_NaN();
    double lambda = 0.0;
    double res = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (iter = 1; iter <= max_iter; ++iter) {
        Eigen::VectorXd w = lu.solve(v);
        if (lu.info() != Eigen::Success || !w.allFinite()) {
            throw SolverError("inverse-power solve failed at iteration " + std::to_string(iter));
        }
        // Orient toward the dominant (positive) component.
        if (std::abs(w.minCoeff()) > w.maxCoeff()) w = -w;
        v = w / w.maxCoeff();

        lambda = rayleigh_quotient(op.L, v);
        res = inf_residual(op.L, v, lambda);
        // Both tolerances are floored at the attainable rounding level so the
        // singularly perturbed regimes (tiny lambda, huge ||L||) terminate.
        const double floor = residual_floor(op.L, v);
        const bool lambda_stable =
            std::isfinite(lambda_prev) &&
            std::abs(lambda - lambda_prev) <= std::max(tol * std::abs(lambda), 4.0 * floor);
        if (iter >= 3 && lambda_stable && res <= std::max(1e-8 * std::abs(lambda), 4.0 * floor)) {
            break;
        }
        lambda_prev = lambda;
    }
    if (iter > max_iter) {
        throw SolverError("inverse power iteration did not converge in " +
                          std::to_string(max_iter) + " iterations; last residual " +
                          std::to_string(res));
    }
    if (v.minCoeff() < -1e-10) {
        throw SolverError("computed eigenfunction has a negative component (" +
                          std::to_string(v.minCoeff()) +
                          "); the discrete operator lost its Perron structure");
    }
    if (!(lambda > 0.0)) {
        throw SolverError("principal eigenvalue is not positive: " + std::to_string(lambda));
    }

    EigenPair pair;
    pair.lambda = lambda;
    pair.psi = v;
    pair.residual = res;
    pair.iterations = iter;
    return pair;
}

EigenPair principal_eigenpair(const SparseOperator& op, double tol, int max_iter) {
    return principal_eigenpair_from(op, Eigen::VectorXd::Ones(op.L.rows()), tol, max_iter);
}

double verify_residual(const SparseOperator& op, const EigenPair& pair) {
    // Row-wise recomputation, independent of the Eigen product used by the solver.
    const Eigen::Index m = op.L.rows();
    Eigen::VectorXd lv = Eigen::VectorXd::Zero(m);
    for (int col = 0; col < op.L.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.L, col); it; ++it) {
            lv[it.row()] += it.value() * pair.psi[it.col()];
        }
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        worst = std::max(worst, std::abs(lv[i] - pair.lambda * pair.psi[i]));
    }
    return worst;
}

} // namespace exitrate
