#include "exitrate/flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace exitrate {

Matrix matrix_exponential(const Matrix& M) {
    if (!M.allFinite()) {
        throw NumericError("matrix exponential of non-finite matrix");
    }
    return M.exp();
}

Trajectory integrate_flow(const Matrix& M, const Vector& x0, double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) {
        throw PreconditionError("integrate_flow needs T > 0 and dt > 0");
    }
    if (M.rows() != M.cols() || M.rows() != x0.size()) {
        throw DimensionError("integrate_flow: M must be square and match x0");
    }
    if (!x0.allFinite()) {
        throw NumericError("integrate_flow: non-finite initial state");
    }
    const Matrix step = matrix_exponential(M * dt);
    const long n_full = static_cast<long>(std::floor(T / dt * (1.0 + 1e-14)));

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    Vector x = x0;
    // Full steps, then one partial step to land exactly on T.
    for (long k = 1; k <= n_full; ++k) {
        x = step * x;
        if (!x.allFinite()) {
            throw NumericError("integrate_flow: state became non-finite at t=" +
                               std::to_string(static_cast<double>(k) * dt));
        }
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.states.push_back(x);
    }
    const double rem = T - static_cast<double>(n_full) * dt;
    if (rem > 1e-14 * std::max(1.0, T)) {
        x = matrix_exponential(M * rem) * x;
        traj.times.push_back(T);
        traj.states.push_back(x);
    }
    return traj;
}

std::optional<Vector> equilibrium_in_domain(const Matrix& M, const Domain& D) {
    const Eigen::Index d = M.rows();
    const Vector origin = Vector::Zero(d);
    if (D.contains_closure(origin)) {
        return origin;
    }
    Eigen::FullPivLU<Matrix> lu(M);
    if (lu.rank() == d) {
        return std::nullopt; // nonsingular flow: origin is the only equilibrium
    }
    const Matrix kernel = lu.kernel();
    for (Eigen::Index k = 0; k < kernel.cols(); ++k) {
        Vector v = kernel.col(k);
        const double n = v.norm();
        if (n == 0.0) continue;
        v /= n;
        // Scale v so that t*v lands in the closure of D, if the line through
        // the origin in direction v meets it.
        if (D.is_ball()) {
            const auto& b = D.as_ball();
            const double t_star = v.dot(b.center);
            const Vector p = t_star * v;
            if (D.contains_closure(p)) return p;
        } else {
            const auto& b = D.as_box();
            double t_lo = -std::numeric_limits<double>::infinity();
            double t_hi = std::numeric_limits<double>::infinity();
            bool feasible = true;
            for (Eigen::Index i = 0; i < d && feasible; ++i) {
                if (v[i] == 0.0) {
                    if (0.0 < b.lower[i] || 0.0 > b.upper[i]) feasible = false;
                } else {
                    double a = b.lower[i] / v[i];
                    double c = b.upper[i] / v[i];
                    if (a > c) std::swap(a, c);
                    t_lo = std::max(t_lo, a);
                    t_hi = std::min(t_hi, c);
                }
            }
            if (feasible && t_lo <= t_hi) {
                const double t_star = (t_lo <= 0.0 && 0.0 <= t_hi) ? 0.0 : (t_lo > 0.0 ? t_lo : t_hi);
                return Vector(t_star * v);
            }
        }
    }
    return std::nullopt;
}

double default_invariant_horizon(const Matrix& M) {
    const Eigen::EigenSolver<Matrix> es(M);
    const double re_max = es.eigenvalues().real().maxCoeff();
    return 10.0 / std::max(1e-6, std::abs(re_max));
}

std::vector<bool> classify_invariant_nodes(const Matrix& M, const Domain& D,
                                           const std::vector<Vector>& nodes, double tol,
                                           double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) {
        throw PreconditionError("classify_invariant_nodes needs T > 0 and dt > 0");
    }
    const Matrix step = matrix_exponential(M * dt);
    const long n_steps = static_cast<long>(std::ceil(T / dt));
    std::vector<bool> invariant(nodes.size(), false);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (D.signed_distance(nodes[i]) > tol) continue;
        Vector x = nodes[i];
        bool stays = true;
        for (long k = 0; k < n_steps && stays; ++k) {
            x = step * x;
            if (!x.allFinite() || D.signed_distance(x) > tol) stays = false;
        }
        invariant[i] = stays;
    }
    return invariant;
}

std::vector<Vector> grid_nodes_over_bounding_box(const Domain& D, int resolution) {
    if (resolution < 2) {
        throw PreconditionError("invariant-set resolution must be at least 2 per axis");
    }
    Vector lo, hi;
    D.bounding_box(lo, hi);
    const int d = D.dim();
    std::vector<Vector> nodes;
    const long total = static_cast<long>(std::pow(resolution, d));
    nodes.reserve(static_cast<std::size_t>(total));
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        Vector x(d);
        for (int ax = d - 1; ax >= 0; --ax) {
            const int i = static_cast<int>(rem % resolution);
            rem /= resolution;
            x[ax] = lo[ax] + (hi[ax] - lo[ax]) * static_cast<double>(i) / (resolution - 1);
        }
        nodes.push_back(std::move(x));
    }
    return nodes;
}

InvariantSetEstimate estimate_invariant_set(const Matrix& M, const Domain& D, int resolution,
                                            double T, double dt) {
    if (resolution < 2) {
        throw PreconditionError("invariant-set resolution must be at least 2 per axis");
    }
    if (D.dim() > 3) {
        throw PreconditionError("grid-based invariant-set estimation supports d <= 3");
    }
    Vector lo, hi;
    D.bounding_box(lo, hi);
    const double h = ((hi - lo) / static_cast<double>(resolution - 1)).maxCoeff();

    const std::vector<Vector> candidates = grid_nodes_over_bounding_box(D, resolution);
    std::vector<Vector> in_closure;
    for (const auto& x : candidates) {
        if (D.contains_closure(x)) in_closure.push_back(x);
    }
    const std::vector<bool> flags = classify_invariant_nodes(M, D, in_closure, h, T, dt);

    InvariantSetEstimate est;
    est.horizon = T;
    for (std::size_t i = 0; i < in_closure.size(); ++i) {
        if (flags[i]) est.nodes.push_back(in_closure[i]);
    }
    est.equilibrium = equilibrium_in_domain(M, D);
    if (est.equilibrium && (M * *est.equilibrium).lpNorm<Eigen::Infinity>() > 1e-10) {
        est.equilibrium.reset();
    }
    est.nonempty = !est.nodes.empty() || est.equilibrium.has_value();
    return est;
}

std::optional<double> exit_time_deterministic(const Matrix& M, const Vector& x0, const Domain& D,
                                              double dt, double t_cap) {
    if (D.signed_distance(x0) > 0.0) {
        throw PreconditionError("exit_time_deterministic: x0 must start in the closure of D");
    }
    const Matrix step = matrix_exponential(M * dt);
    const double tol = dt * 1e-3;

    Vector x_prev = x0;
    double t_prev = 0.0;
    while (t_prev < t_cap) {
        const double h = std::min(dt, t_cap - t_prev);
        const Vector x_next = (h == dt) ? Vector(step * x_prev) : Vector(matrix_exponential(M * h) * x_prev);
        const double t_next = t_prev + h;
        if (D.signed_distance(x_next) > 0.0) {
            // Bisect the crossing inside (t_prev, t_next] on the exact flow.
            double a = 0.0, b = h;
            while (b - a > tol) {
                const double mid = 0.5 * (a + b);
                const Vector xm = matrix_exponential(M * mid) * x_prev;
                if (D.signed_distance(xm) > 0.0) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return t_prev + 0.5 * (a + b);
        }
        x_prev = x_next;
        t_prev = t_next;
    }
    return std::nullopt;
}

} // namespace exitrate
