#include "doctest.h"

#include <cmath>
#include <numbers>

#include "exitrate/elliptic.hpp"

using namespace exitrate;

namespace {

const Domain interval(double a, double b) {
    return Domain::box(Vector::Constant(1, a), Vector::Constant(1, b));
}

} // namespace

TEST_CASE("grid counting semantics") {
    // endpoints are boundary nodes
    const OperatorGrid g5(interval(-1.0, 1.0), {5});
    REQUIRE(g5.interior_count() == 3);
    CHECK(g5.interior_coords(0)[0] == doctest::Approx(-0.5));
    CHECK(g5.interior_coords(1)[0] == doctest::Approx(0.0));
    CHECK(g5.interior_coords(2)[0] == doctest::Approx(0.5));

    const Domain square = Domain::box(Vector::Zero(2), Vector::Constant(2, 1.0));
    CHECK(OperatorGrid(square, {8, 8}).interior_count() == 36);

    const Domain ball = Domain::ball(Vector::Zero(2), 1.0);
    const OperatorGrid masked(ball, {16, 16});
    CHECK(masked.interior_count() < 14 * 14);
    for (std::int64_t k = 0; k < masked.interior_count(); ++k) {
        CHECK(ball.contains(masked.interior_coords(k)));
    }

    CHECK_THROWS_AS(build_grid(interval(-1.0, 1.0), 5), PreconditionError);
}

TEST_CASE("pure diffusion reduces to the negated Laplacian") {
    const OperatorGrid grid(interval(-1.0, 1.0), {11});
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    const SparseOperator op = discretize(Matrix::Zero(1, 1), diff, 2.0, grid);
    const double h = grid.spacing(0);
    const Eigen::MatrixXd L = Eigen::MatrixXd(op.L);
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        CHECK(L(i, i) == doctest::Approx(2.0 / (h * h)));
        if (i + 1 < L.rows()) {
            CHECK(L(i, i + 1) == doctest::Approx(-1.0 / (h * h)));
            CHECK(L(i + 1, i) == doctest::Approx(-1.0 / (h * h)));
        }
    }
}

TEST_CASE("drift rows apply exact first differences to linear functions") {
    Matrix M(1, 1);
    M << 0.8;
    const OperatorGrid grid(interval(-1.0, 1.0), {41});
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    const SparseOperator op = discretize(M, diff, 0.3, grid);
    Eigen::VectorXd linear(grid.interior_count());
    for (std::int64_t k = 0; k < grid.interior_count(); ++k) {
        linear[k] = grid.interior_coords(k)[0];
    }
    const Eigen::VectorXd Lx = op.L * linear;
    // Rows whose full stencil lies in the interior see -b(x) exactly: the
    // second difference of a linear function vanishes and the upwind first
    // difference is exact.
    for (std::int64_t k = 2; k < grid.interior_count() - 2; ++k) {
        const double x = grid.interior_coords(k)[0];
        CHECK(Lx[k] == doctest::Approx(-0.8 * x).epsilon(1e-10));
    }
}

TEST_CASE("interior row sums vanish for conservative stencils") {
    const Domain square = Domain::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
    const OperatorGrid grid(square, {17, 17});
    Matrix base(2, 2);
    base << 1.0, 0.3, 0.0, 0.9;
    const DiffusionSpec diff(base);
    const SparseOperator op = discretize(Matrix::Zero(2, 2), diff, 1.0, grid);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.interior_count());
    const Eigen::VectorXd row_sums = op.L * ones;
    for (std::int64_t k = 0; k < grid.interior_count(); ++k) {
        const std::int64_t flat = grid.interior_flat(k);
        bool fully_interior = true;
        for (int ax = 0; ax < 2 && fully_interior; ++ax) {
            for (int dir : {-1, 1}) {
                const std::int64_t nb = grid.neighbor(flat, ax, dir);
                for (int ax2 = 0; ax2 < 2; ++ax2) {
                    for (int dir2 : {-1, 1}) {
                        const std::int64_t nb2 = grid.neighbor(nb, ax2, dir2);
                        if (nb2 >= 0 && grid.interior_ordinal(nb2) < 0) fully_interior = false;
                    }
                }
                if (nb < 0 || grid.interior_ordinal(nb) < 0) fully_interior = false;
            }
        }
        if (fully_interior) {
            CHECK(std::abs(row_sums[k]) <= 1e-12 * std::abs(op.L.coeff(k, k)));
        } else {
            CHECK(row_sums[k] >= -1e-12 * std::abs(op.L.coeff(k, k)));
        }
    }
}

TEST_CASE("mixed second derivatives are exact on bilinear functions") {
    const Domain square = Domain::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
    const OperatorGrid grid(square, {17, 17});
    Matrix base(2, 2);
    base << 1.0, 0.0, 0.5, std::sqrt(0.75); // a = base base^T has a_12 = 0.5
    const DiffusionSpec diff(base);
    const double eps = 0.8;
    const SparseOperator op = discretize(Matrix::Zero(2, 2), diff, eps, grid);
    Eigen::VectorXd bilinear(grid.interior_count());
    for (std::int64_t k = 0; k < grid.interior_count(); ++k) {
        const Vector x = grid.interior_coords(k);
        bilinear[k] = x[0] * x[1];
    }
    const Eigen::VectorXd Lb = op.L * bilinear;
    // G(x1 x2) = eps * a_12 on rows with a complete stencil.
    const double expected = -eps * 0.5;
    int checked = 0;
    for (std::int64_t k = 0; k < grid.interior_count(); ++k) {
        const std::int64_t flat = grid.interior_flat(k);
        bool full = true;
        for (int ax = 0; ax < 2; ++ax) {
            for (int dir : {-1, 1}) {
                const std::int64_t nb = grid.neighbor(flat, ax, dir);
                if (nb < 0 || grid.interior_ordinal(nb) < 0) full = false;
                const std::int64_t diag = grid.neighbor(nb, 1 - ax, dir);
                if (diag < 0 || grid.interior_ordinal(diag) < 0) full = false;
                const std::int64_t anti = grid.neighbor(nb, 1 - ax, -dir);
                if (anti < 0 || grid.interior_ordinal(anti) < 0) full = false;
            }
        }
        if (!full) continue;
        ++checked;
        CHECK(Lb[k] == doctest::Approx(expected).epsilon(1e-10));
    }
    CHECK(checked > 100);
}

TEST_CASE("strong cross-correlation at coarse resolution is diagnosed") {
    const Domain square = Domain::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
    const OperatorGrid grid(square, {17, 17});
    // a = [[1, 1.2], [1.2, 2]] is SPD but not diagonally dominant.
    Matrix a(2, 2);
    a << 1.0, 1.2, 1.2, 2.0;
    const Matrix base = Eigen::LLT<Matrix>(a).matrixL();
    const DiffusionSpec diff(base);
    try {
        discretize(Matrix::Zero(2, 2), diff, 1.0, grid);
        FAIL("expected a stencil diagnostic");
    } catch (const StencilError& e) {
        CHECK_FALSE(e.offending_nodes().empty());
        CHECK(std::string(e.what()).find("refine") != std::string::npos);
    }
}

TEST_CASE("principal eigenpair matches the analytic Dirichlet value") {
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    const OperatorGrid grid(interval(-1.0, 1.0), {201}); // h = 2/200
    const SparseOperator op = discretize(Matrix::Zero(1, 1), diff, 2.0, grid);
    const EigenPair pair = principal_eigenpair(op);
    const double exact = std::numbers::pi * std::numbers::pi / 4.0;
    CHECK(std::abs(pair.lambda - exact) / exact < 0.01);

    // psi approaches cos(pi x / 2) with max-norm 1
    CHECK(pair.psi.maxCoeff() == doctest::Approx(1.0));
    CHECK(pair.psi.minCoeff() > 0.0);
    for (std::int64_t k = 0; k < grid.interior_count(); k += 20) {
        const double x = grid.interior_coords(k)[0];
        CHECK(pair.psi[k] == doctest::Approx(std::cos(std::numbers::pi * x / 2.0)).epsilon(5e-3));
    }
    CHECK(pair.residual <= 1e-8 * pair.lambda);
    CHECK(verify_residual(op, pair) <= 1e-8 * pair.lambda);
}

TEST_CASE("eigenvalue grows when the domain shrinks") {
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    const OperatorGrid big(interval(-1.0, 1.0), {201});
    const OperatorGrid small(interval(-0.5, 0.5), {101}); // equal node density
    const double lam_big =
        principal_eigenpair(discretize(Matrix::Zero(1, 1), diff, 2.0, big)).lambda;
    const double lam_small =
        principal_eigenpair(discretize(Matrix::Zero(1, 1), diff, 2.0, small)).lambda;
    CHECK(lam_big < lam_small);
    CHECK(lam_small == doctest::Approx(4.0 * lam_big).epsilon(1e-3));
}

TEST_CASE("drift-free eigenvalues scale linearly in epsilon") {
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    const OperatorGrid grid(interval(-1.0, 1.0), {101});
    const double l1 = principal_eigenpair(discretize(Matrix::Zero(1, 1), diff, 0.7, grid)).lambda;
    const double l3 = principal_eigenpair(discretize(Matrix::Zero(1, 1), diff, 2.1, grid)).lambda;
    CHECK(l3 == doctest::Approx(3.0 * l1).epsilon(1e-9));
}

TEST_CASE("perron structure: simple eigenvalue, positive eigenfunction") {
    Matrix M(1, 1);
    M << -1.0;
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    const OperatorGrid grid(interval(-1.0, 1.0), {201});
    const SparseOperator op = discretize(M, diff, 0.5, grid);
    const EigenPair first = principal_eigenpair(op);
    // second run from a sign-wiggling start converges to the same pair
    Eigen::VectorXd start(grid.interior_count());
    for (Eigen::Index i = 0; i < start.size(); ++i) {
        start[i] = (i % 3 == 0) ? -1.0 : 1.0 + 0.1 * static_cast<double>(i % 7);
    }
    const EigenPair second = principal_eigenpair_from(op, start);
    CHECK(std::abs(first.lambda - second.lambda) / first.lambda < 1e-6);
    CHECK(first.psi.minCoeff() > 0.0);
}

TEST_CASE("grid refinement tightens the eigenvalue") {
    Matrix M(1, 1);
    M << -1.0;
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    std::vector<double> lambdas;
    for (int res : {101, 201, 401}) {
        const OperatorGrid grid(interval(-1.0, 1.0), {res});
        lambdas.push_back(principal_eigenpair(discretize(M, diff, 0.5, grid)).lambda);
    }
    const double gap_coarse = std::abs(lambdas[0] - lambdas[1]);
    const double gap_fine = std::abs(lambdas[1] - lambdas[2]);
    CHECK(gap_coarse / gap_fine >= 1.7);
}
