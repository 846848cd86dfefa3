#include "doctest.h"

#include <cmath>

#include "exitrate/model.hpp"
#include "exitrate/rng.hpp"

using namespace exitrate;

namespace {

Matrix random_matrix(const CounterRng& rng, std::uint64_t& counter, int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = rng.normal(counter++);
    }
    return m;
}

} // namespace

TEST_CASE("closed_loop arithmetic") {
    Matrix A(1, 1), B(1, 1), G(1, 1);
    A << 0.0;
    B << 1.0;
    G << -2.0;
    const MultiChannelSystem sys(A, {B});
    CHECK(closed_loop(sys, FeedbackTuple({G}))(0, 0) == -2.0);

    // zero gains reproduce A exactly
    Matrix A2 = Matrix::Zero(2, 2);
    A2 << 0.3, -1.2, 0.7, 0.1;
    const MultiChannelSystem sys2(A2, {Matrix::Identity(2, 2)});
    CHECK(closed_loop(sys2, FeedbackTuple({Matrix::Zero(2, 2)})) == A2);

    Matrix G2(2, 2);
    G2 << -1.0, 0.0, 0.0, -3.0;
    const MultiChannelSystem sys3(Matrix::Zero(2, 2), {Matrix::Identity(2, 2)});
    const Matrix M = closed_loop(sys3, FeedbackTuple({G2}));
    CHECK(M(0, 0) == -1.0);
    CHECK(M(1, 1) == -3.0);
    CHECK(M(0, 1) == 0.0);
}

TEST_CASE("closed_loop is linear in the gains") {
    const CounterRng rng(41);
    std::uint64_t c = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix A = random_matrix(rng, c, 3, 3);
        const Matrix B1 = random_matrix(rng, c, 3, 2);
        const Matrix B2 = random_matrix(rng, c, 3, 1);
        const MultiChannelSystem sys(A, {B1, B2});
        const Matrix g1 = random_matrix(rng, c, 2, 3);
        const Matrix g2 = random_matrix(rng, c, 1, 3);
        const Matrix d1 = random_matrix(rng, c, 2, 3);
        const Matrix d2 = random_matrix(rng, c, 1, 3);
        const Matrix lhs = closed_loop(sys, FeedbackTuple({g1 + d1, g2 + d2}));
        const Matrix rhs = closed_loop(sys, FeedbackTuple({g1, g2})) + B1 * d1 + B2 * d2;
        CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("closed_loop names the offending channel") {
    const MultiChannelSystem sys(Matrix::Zero(2, 2), {Matrix::Identity(2, 2), Matrix::Ones(2, 1)});
    // channel 2 gain must be 1x2, supply 2x2
    const FeedbackTuple bad({Matrix::Zero(2, 2), Matrix::Zero(2, 2)});
    CHECK_THROWS_WITH_AS(closed_loop(sys, bad),
                         doctest::Contains("channel 2"), DimensionError);
}

TEST_CASE("validate_diffusion certified bounds") {
    CHECK(DiffusionSpec(Matrix::Identity(2, 2)).kappa() == doctest::Approx(1.0));

    Matrix diag(2, 2);
    diag << 2.0, 0.0, 0.0, 1.0;
    CHECK(DiffusionSpec(diag).kappa() == doctest::Approx(1.0));

    // saturating modulation with beta = -0.5: inf over t >= 0 of
    // (1 + beta t/(1+t))^2 approached as t -> inf.
    const DiffusionSpec spec(Matrix::Identity(1, 1),
                             Modulation{ModulationKind::Saturating, -0.5});
    CHECK(spec.kappa() == doctest::Approx(0.25).epsilon(1e-12));
    double scan_inf = 1e300;
    for (double t = 0.0; t < 1e6; t = t * 1.5 + 0.1) {
        const double m = 1.0 - 0.5 * t / (1.0 + t);
        scan_inf = std::min(scan_inf, m * m);
    }
    CHECK(spec.kappa() <= scan_inf + 1e-9);
    CHECK(spec.kappa() == doctest::Approx(scan_inf).epsilon(1e-5));
}

TEST_CASE("validate_diffusion rejects degenerate noise") {
    Matrix singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(DiffusionSpec{singular}, EllipticityError);
    CHECK_THROWS_AS(DiffusionSpec(Matrix::Identity(1, 1),
                                  Modulation{ModulationKind::Saturating, -1.0}),
                    EllipticityError);
}

TEST_CASE("kappa certifies sigma sigma^T at random sample points") {
    Matrix base(2, 2);
    base << 1.0, 0.3, -0.2, 0.8;
    const DiffusionSpec spec(base, Modulation{ModulationKind::Saturating, 0.7});
    const CounterRng rng(7);
    std::uint64_t c = 0;
    for (int i = 0; i < 1000; ++i) {
        Vector x(2);
        x << 5.0 * rng.normal(c++), 5.0 * rng.normal(c++);
        const Matrix a = spec.sigma(x) * spec.sigma(x).transpose();
        const double lam_min = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff();
        CHECK(lam_min >= spec.kappa() - 1e-12);
    }
}

TEST_CASE("domain membership agrees with signed distance") {
    const Domain box = Domain::box(Vector::Constant(2, -1.0), Vector::Constant(2, 2.0));
    Vector ball_center(2);
    ball_center << 0.5, -0.5;
    const Domain ball = Domain::ball(ball_center, 1.5);
    const CounterRng rng(99);
    std::uint64_t c = 0;
    for (int i = 0; i < 500; ++i) {
        Vector x(2);
        x << 4.0 * rng.normal(c++), 4.0 * rng.normal(c++);
        for (const Domain* D : {&box, &ball}) {
            CHECK(D->contains(x) == (D->signed_distance(x) < 0.0));
            CHECK(D->contains_closure(D->project(x)));
        }
    }
    // exact distances
    Vector p(2);
    p << 3.0, 0.0;
    CHECK(box.signed_distance(p) == doctest::Approx(1.0));
    p << 0.0, 0.0;
    CHECK(box.signed_distance(p) == doctest::Approx(-1.0));
    CHECK(ball.signed_distance(ball_center) == doctest::Approx(-1.5));
}

TEST_CASE("structural validation of the remaining model types") {
    CHECK_THROWS_AS(Domain::box(Vector::Constant(2, 1.0), Vector::Constant(2, 1.0)),
                    DimensionError);
    CHECK_THROWS_AS(Domain::ball(Vector::Zero(2), 0.0), DimensionError);
    CHECK_THROWS_AS(ControlBox(Vector::Constant(1, 2.0), Vector::Constant(1, 1.0)),
                    DimensionError);
    CHECK_THROWS_AS(NoiseLevel(0.0, 1.0), PreconditionError);
    CHECK_THROWS_AS(NoiseLevel(1.0, 1.0), PreconditionError);
    CHECK(NoiseLevel(0.5, 1.0).epsilon == 0.5);
    const ControlBox u(Vector::Constant(2, -1.0), Vector::Constant(2, 3.0));
    CHECK(u.midpoint()[0] == doctest::Approx(1.0));
    CHECK(u.contains(u.midpoint()));
    CHECK_FALSE(u.contains(Vector::Constant(2, 4.0)));
}
