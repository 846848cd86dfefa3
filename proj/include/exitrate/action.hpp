#pragma once

#include <utility>
#include <vector>

#include "exitrate/model.hpp"

namespace exitrate {

/// Uniform-step discrete path phi_0..phi_N with phi_0 fixed at the start
/// point; every state lies in the closure of D (up to projection tolerance).
struct DiscretePath {
    double horizon = 0.0;
    std::vector<Vector> states; // N+1 states

    int steps() const noexcept { return static_cast<int>(states.size()) - 1; }
    double dt() const noexcept { return horizon / steps(); }
};

/// Quadratic path cost: midpoint quadrature of the drift-residual energy
/// (1/2) sum_k dt * r_k^T a(mid_k)^{-1} r_k with r_k = (phi_{k+1}-phi_k)/dt
/// - M mid_k.
double action_value(const DiscretePath& path, const Matrix& M, const DiffusionSpec& diffusion);

/// Analytic gradient with respect to the free states phi_1..phi_N, flattened
/// row-major (state index major, component minor). Includes the modulation
/// sensitivity of a(x)^{-1}.
Eigen::VectorXd action_gradient(const DiscretePath& path, const Matrix& M,
                                const DiffusionSpec& diffusion);

struct ActionReport {
    double value = 0.0;
    DiscretePath path;
    bool converged = false;
    int iterations = 0;
};

/// Minimizes the discrete action over paths confined to the closure of D by
/// projected gradient descent with Armijo backtracking; three deterministic
/// starts (rest at x0, projected flow path, perturbed rest), best kept.
ActionReport minimize_action(const Vector& x0, double T, int N, const Matrix& M,
                             const DiffusionSpec& diffusion, const Domain& D);

struct ConfinementRateTable {
    std::vector<double> horizons;
    std::vector<double> values;      // minimized action per horizon
    std::vector<double> value_per_t; // value / T
    double r_hat = 0.0;              // value/T at the largest horizon
    bool stabilized = false;         // last two value/T within 5% relative
};

/// Average confinement cost over an increasing horizon schedule. The step
/// count per horizon is max(min_steps, round(T * steps_per_time)).
ConfinementRateTable estimate_r(const Vector& x0, const Matrix& M, const DiffusionSpec& diffusion,
                                const Domain& D, const std::vector<double>& t_schedule,
                                int steps_per_time = 16, int min_steps = 16);

struct ExponentFit {
    double r = 0.0;     // intercept of -eps log lambda vs eps
    double slope = 0.0; // finite-eps correction coefficient
    std::vector<double> residuals;
};

/// Fits y(eps) = -eps log lambda_eps = r + c eps by least squares over
/// (eps, lambda) pairs with eps decreasing.
ExponentFit extrapolate_rate_exponent(const std::vector<std::pair<double, double>>& pairs);

struct MarginCheck {
    double margin = 0.0;
    bool holds = false;
};

/// margin = r_closed_loop - max_i r_channel_i; holds iff margin >= -tol.
MarginCheck corollary_check(double r_closed_loop, const std::vector<double>& r_channels,
                            double tol = 1e-6);

struct SelectionTable {
    std::size_t best_index = 0;
    std::vector<double> values; // minimized action per candidate
};

/// Minimizes the action per candidate closed loop and returns the argmin
/// (ties broken by list order).
SelectionTable minimal_action_selection(const MultiChannelSystem& system,
                                        const std::vector<FeedbackTuple>& candidates,
                                        const Vector& x0, double T, int N,
                                        const DiffusionSpec& diffusion, const Domain& D);

} // namespace exitrate
