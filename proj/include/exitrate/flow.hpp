#pragma once

#include <optional>
#include <vector>

#include "exitrate/model.hpp"

namespace exitrate {

/// Sampled deterministic orbit t -> exp(M t) x0.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;

    const Vector& final_state() const { return states.back(); }
};

/// exp(M), scaling-and-squaring Pade.
Matrix matrix_exponential(const Matrix& M);

/// Integrates xdot = M x from x0 over [0, T] by exact exponential stepping;
/// the step matrix exp(M dt) is formed once. A trailing partial step covers
/// T when it is not a multiple of dt.
Trajectory integrate_flow(const Matrix& M, const Vector& x0, double T, double dt);

/// Finds an equilibrium of xdot = M x inside the closure of D: the origin if
/// it belongs to D closure, otherwise a kernel point scaled into the closure
/// when M is singular.
std::optional<Vector> equilibrium_in_domain(const Matrix& M, const Domain& D);

struct InvariantSetEstimate {
    std::vector<Vector> nodes;   // grid nodes classified invariant
    bool nonempty = false;
    double horizon = 0.0;
    std::optional<Vector> equilibrium;
};

/// Horizon heuristic: 10 / max(1e-6, |Re lambda_max(M)|).
double default_invariant_horizon(const Matrix& M);

/// Uniform tensor nodes over the bounding box of D (resolution per axis,
/// endpoints included); the raw candidate set for invariant-set estimation.
std::vector<Vector> grid_nodes_over_bounding_box(const Domain& D, int resolution);

/// Classifies each node: true iff its forward orbit up to time T stays
/// within the closure of D inflated by `tol`.
std::vector<bool> classify_invariant_nodes(const Matrix& M, const Domain& D,
                                           const std::vector<Vector>& nodes, double tol,
                                           double T, double dt);

/// Grid under-approximation of the maximal invariant set of the closed-loop
/// flow in the closure of D. The equilibrium check catches measure-zero
/// invariant sets the grid misses.
InvariantSetEstimate estimate_invariant_set(const Matrix& M, const Domain& D, int resolution,
                                            double T, double dt);

/// First time the orbit of x0 leaves the closure of D, refined by bisection
/// to dt * 1e-3; nullopt when no exit happens before t_cap.
std::optional<double> exit_time_deterministic(const Matrix& M, const Vector& x0, const Domain& D,
                                              double dt, double t_cap);

} // namespace exitrate
