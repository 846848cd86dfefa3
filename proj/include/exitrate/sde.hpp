#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "exitrate/model.hpp"

namespace exitrate {

/// Drift for the simulated process: b(x) = M x plus an optional control
/// term (e.g. B_i u_i(x) looked up from a grid policy).
struct Drift {
    Matrix M;
    std::function<Vector(const Vector&)> control; // may be empty

    explicit Drift(Matrix M_) : M(std::move(M_)) {}
    Drift(Matrix M_, std::function<Vector(const Vector&)> control_)
        : M(std::move(M_)), control(std::move(control_)) {}
};

struct ExitSampleMeta {
    double epsilon = 0.0;
    double dt = 0.0;
    double t_max = 0.0;
    std::uint64_t seed = 0;
    int samples = 0;
};

/// First-exit samples from N independent runs. Censored runs reached t_max
/// without leaving D.
struct ExitSampleSet {
    std::vector<std::optional<double>> per_run; // run index -> exit time or censored
    ExitSampleMeta meta;

    int censored_count() const;
    /// Exit times in run order (censored runs omitted).
    std::vector<double> exit_times() const;
    /// Exit times sorted ascending.
    std::vector<double> sorted_exit_times() const;
};

/// One Euler-Maruyama path from x0 until it leaves D or reaches t_max.
/// Gaussian increments come from a counter-based generator keyed by `seed`,
/// so the result is a pure function of the arguments.
std::optional<double> simulate_exit(const Drift& drift, const DiffusionSpec& diffusion,
                                    double epsilon, const Vector& x0, const Domain& D, double dt,
                                    double t_max, std::uint64_t seed);

/// N runs with per-run seeds base_seed + run index. `threads` only controls
/// execution; results are identical to the sequential order.
ExitSampleSet sample_exit_times(const Drift& drift, const DiffusionSpec& diffusion, double epsilon,
                                const Vector& x0, const Domain& D, double dt, double t_max, int n,
                                std::uint64_t base_seed, int threads = 1);

/// Empirical survival probabilities S(t) = P{tau > t} on an increasing grid.
std::vector<double> survival_curve(const ExitSampleSet& samples, const std::vector<double>& t_grid);

struct RateEstimate {
    double rate = 0.0;      // positive decay rate of P{tau > t}
    double stderr_ = 0.0;   // regression standard error of the slope
    double t_lo = 0.0;
    double t_hi = 0.0;
    double r_squared = 0.0;
};

/// Default tail-fit window: median exit time to the 90th percentile.
std::pair<double, double> default_rate_window(const ExitSampleSet& samples);

/// Least-squares slope of log S(t) over the window, negated. Throws
/// TailStarvedError when the tail is too thin to regress on.
RateEstimate estimate_exit_rate(const ExitSampleSet& samples,
                                std::optional<std::pair<double, double>> window = std::nullopt);

} // namespace exitrate
