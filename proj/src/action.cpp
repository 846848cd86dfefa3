#include "exitrate/action.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "exitrate/flow.hpp"
#include "exitrate/rng.hpp"

namespace exitrate {

namespace {

void check_path(const DiscretePath& path, const Matrix& M, const DiffusionSpec& diffusion) {
    if (path.states.size() < 2) {
        throw PreconditionError("path needs at least one step");
    }
    if (!(path.horizon > 0.0)) {
        throw PreconditionError("path horizon must be positive");
    }
    const Eigen::Index d = path.states.front().size();
    if (M.rows() != d || M.cols() != d || diffusion.dim() != d) {
        throw DimensionError("action: drift/diffusion dimensions do not match the path");
    }
}

} // namespace

double action_value(const DiscretePath& path, const Matrix& M, const DiffusionSpec& diffusion) {
    check_path(path, M, diffusion);
    const double dt = path.dt();
    const Matrix& a0_inv = diffusion.base_aat_inverse();
    const bool constant_mod = diffusion.modulation().kind == ModulationKind::Constant;

    double total = 0.0;
    for (int k = 0; k < path.steps(); ++k) {
        const Vector mid = 0.5 * (path.states[k] + path.states[k + 1]);
        const Vector r = (path.states[k + 1] - path.states[k]) / dt - M * mid;
        double q = r.dot(a0_inv * r);
        if (!constant_mod) {
            const double m = diffusion.modulation().value(mid);
            q /= m * m;
        }
        total += 0.5 * dt * q;
    }
    if (!std::isfinite(total)) {
        throw NumericError("action_value is not finite");
    }
    return total;
}

Eigen::VectorXd action_gradient(const DiscretePath& path, const Matrix& M,
                                const DiffusionSpec& diffusion) {
    check_path(path, M, diffusion);
    const double dt = path.dt();
    const int N = path.steps();
    const Eigen::Index d = path.states.front().size();
    const Matrix& a0_inv = diffusion.base_aat_inverse();
    const Matrix Mt = M.transpose();
    const bool constant_mod = diffusion.modulation().kind == ModulationKind::Constant;

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N) * d);
    const auto add = [&](int state_index, const Vector& v) {
        if (state_index < 1) return; // phi_0 is fixed
        grad.segment(static_cast<Eigen::Index>(state_index - 1) * d, d) += v;
    };

    for (int k = 0; k < N; ++k) {
        const Vector mid = 0.5 * (path.states[k] + path.states[k + 1]);
        const Vector r = (path.states[k + 1] - path.states[k]) / dt - M * mid;
        const Vector ar = a0_inv * r;
        double w = 1.0;
        if (!constant_mod) {
            const double m = diffusion.modulation().value(mid);
            w = 1.0 / (m * m);
        }
        // d/dphi of (dt/2) w r^T a0inv r through the residual.
        const Vector half_mt_ar = 0.5 * dt * (Mt * ar);
        add(k, w * (-ar - half_mt_ar));
        add(k + 1, w * (ar - half_mt_ar));
        if (!constant_mod) {
            // Sensitivity of the 1/m^2 weight through the midpoint: the -2
            // from m^-2 and the 1/2 of d(mid)/dphi cancel, leaving -m^-3
            // grad m at each endpoint.
            const double m = diffusion.modulation().value(mid);
            const Vector dm = diffusion.modulation().gradient(mid);
            const Vector term = (0.5 * dt * r.dot(a0_inv * r)) * (-std::pow(m, -3.0)) * dm;
            add(k, term);
            add(k + 1, term);
        }
    }
    return grad;
}

namespace {

DiscretePath project_path(DiscretePath path, const Domain& D) {
    for (std::size_t i = 1; i < path.states.size(); ++i) {
        path.states[i] = D.project(path.states[i]);
    }
    return path;
}

struct DescentResult {
    DiscretePath path;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

DescentResult projected_descent(DiscretePath path, const Matrix& M,
                                const DiffusionSpec& diffusion, const Domain& D) {
    constexpr double armijo = 1e-4;
    constexpr int max_iters = 10000;
    const int N = path.steps();
    const Eigen::Index d = path.states.front().size();

    const auto apply_step = [&](const DiscretePath& p, const Eigen::VectorXd& g, double s) {
        DiscretePath q = p;
        for (int j = 1; j <= N; ++j) {
            q.states[static_cast<std::size_t>(j)] =
                D.project(p.states[static_cast<std::size_t>(j)] -
                          s * g.segment(static_cast<Eigen::Index>(j - 1) * d, d));
        }
        return q;
    };

    double value = action_value(path, M, diffusion);
    double step = 1.0;
    int iter = 0;
    bool converged = false;
    while (iter < max_iters) {
        ++iter;
        const Eigen::VectorXd g = action_gradient(path, M, diffusion);

        // Projected-gradient stationarity at unit step.
        const DiscretePath probe = apply_step(path, g, 1.0);
        double pg = 0.0;
        for (int j = 1; j <= N; ++j) {
            pg = std::max(pg, (path.states[static_cast<std::size_t>(j)] -
                               probe.states[static_cast<std::size_t>(j)])
                                  .lpNorm<Eigen::Infinity>());
        }
        if (pg < 1e-6 * (1.0 + value)) {
            converged = true;
            break;
        }

        bool accepted = false;
        while (step > 1e-18) {
            const DiscretePath trial = apply_step(path, g, step);
            const double trial_value = action_value(trial, M, diffusion);
            double moved = 0.0;
            for (int j = 1; j <= N; ++j) {
                moved += g.segment(static_cast<Eigen::Index>(j - 1) * d, d)
                             .dot(path.states[static_cast<std::size_t>(j)] -
                                  trial.states[static_cast<std::size_t>(j)]);
            }
            if (trial_value <= value - armijo * moved && trial_value <= value) {
                path = trial;
                value = trial_value;
                step = std::min(step * 2.0, 1e6);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            converged = true; // stationary to floating-point resolution
            break;
        }
    }
    return DescentResult{std::move(path), value, converged, iter};
}

} // namespace

ActionReport minimize_action(const Vector& x0, double T, int N, const Matrix& M,
                             const DiffusionSpec& diffusion, const Domain& D) {
    if (N < 16) {
        throw PreconditionError("minimize_action requires at least 16 steps");
    }
    if (D.signed_distance(x0) > 1e-10) {
        throw PreconditionError("minimize_action: x0 must lie in the closure of D");
    }
    const Vector start = D.project(x0);
    const double dt = T / N;

    std::vector<DiscretePath> starts;
    {
        DiscretePath rest;
        rest.horizon = T;
        rest.states.assign(static_cast<std::size_t>(N) + 1, start);
        starts.push_back(rest);

        DiscretePath flow;
        flow.horizon = T;
        flow.states.reserve(static_cast<std::size_t>(N) + 1);
        const Matrix E = matrix_exponential(M * dt);
        Vector x = start;
        flow.states.push_back(x);
        for (int k = 1; k <= N; ++k) {
            x = E * x;
            if (!x.allFinite()) x = start;
            flow.states.push_back(x);
        }
        starts.push_back(project_path(std::move(flow), D));

        DiscretePath jitter = rest;
        const CounterRng rng(0x5EED5u);
        Vector lo, hi;
        D.bounding_box(lo, hi);
        const double scale = 0.05 * (hi - lo).maxCoeff();
        std::uint64_t c = 0;
        for (int k = 1; k <= N; ++k) {
            Vector& s = jitter.states[static_cast<std::size_t>(k)];
            for (Eigen::Index j = 0; j < s.size(); ++j) {
                s[j] += scale * rng.normal(c++);
            }
        }
        starts.push_back(project_path(std::move(jitter), D));
    }

    ActionReport best;
    best.value = std::numeric_limits<double>::infinity();
    for (const DiscretePath& s : starts) {
        const DescentResult r = projected_descent(s, M, diffusion, D);
        if (r.value < best.value) {
            best.value = r.value;
            best.path = r.path;
            best.converged = r.converged;
            best.iterations = r.iterations;
        }
    }
    return best;
}

ConfinementRateTable estimate_r(const Vector& x0, const Matrix& M, const DiffusionSpec& diffusion,
                                const Domain& D, const std::vector<double>& t_schedule,
                                int steps_per_time, int min_steps) {
    if (t_schedule.size() < 3) {
        throw PreconditionError("estimate_r needs a schedule of at least 3 horizons");
    }
    for (std::size_t i = 0; i + 1 < t_schedule.size(); ++i) {
        if (!(t_schedule[i] < t_schedule[i + 1])) {
            throw PreconditionError("estimate_r: horizon schedule must be increasing");
        }
    }
    ConfinementRateTable table;
    for (double T : t_schedule) {
        const int N = std::max(min_steps,
                               static_cast<int>(std::lround(T * static_cast<double>(steps_per_time))));
        const ActionReport rep = minimize_action(x0, T, N, M, diffusion, D);
        table.horizons.push_back(T);
        table.values.push_back(rep.value);
        table.value_per_t.push_back(rep.value / T);
    }
    const std::size_t n = table.value_per_t.size();
    table.r_hat = table.value_per_t.back();
    const double a = table.value_per_t[n - 2];
    const double b = table.value_per_t[n - 1];
    table.stabilized = (std::abs(a - b) <= 0.05 * std::max(std::abs(a), std::abs(b))) ||
                       (std::abs(a) < 1e-6 && std::abs(b) < 1e-6);
    return table;
}

ExponentFit extrapolate_rate_exponent(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) {
        throw PreconditionError("extrapolate_rate_exponent needs at least 3 (eps, lambda) pairs");
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!(pairs[i].second > 0.0)) {
            throw PreconditionError("extrapolate_rate_exponent: lambda values must be positive");
        }
        if (i + 1 < pairs.size() && !(pairs[i].first > pairs[i + 1].first)) {
            throw PreconditionError("extrapolate_rate_exponent: eps values must be decreasing");
        }
    }
    const std::size_t n = pairs.size();
    double ex = 0.0, ey = 0.0;
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = -pairs[i].first * std::log(pairs[i].second);
        ex += pairs[i].first;
        ey += ys[i];
    }
    ex /= static_cast<double>(n);
    ey /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (pairs[i].first - ex) * (pairs[i].first - ex);
        sxy += (pairs[i].first - ex) * (ys[i] - ey);
    }
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.r = ey - fit.slope * ex;
    for (std::size_t i = 0; i < n; ++i) {
        fit.residuals.push_back(ys[i] - (fit.r + fit.slope * pairs[i].first));
    }
    return fit;
}

MarginCheck corollary_check(double r_closed_loop, const std::vector<double>& r_channels,
                            double tol) {
    if (r_channels.empty()) {
        throw PreconditionError("corollary_check needs at least one channel exponent");
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (double r : r_channels) worst = std::max(worst, r);
    MarginCheck check;
    check.margin = r_closed_loop - worst;
    check.holds = check.margin >= -tol;
    return check;
}

SelectionTable minimal_action_selection(const MultiChannelSystem& system,
                                        const std::vector<FeedbackTuple>& candidates,
                                        const Vector& x0, double T, int N,
                                        const DiffusionSpec& diffusion, const Domain& D) {
    if (candidates.empty()) {
        throw PreconditionError("minimal_action_selection needs at least one candidate");
    }
    SelectionTable table;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Matrix M = closed_loop(system, candidates[i]);
        const ActionReport rep = minimize_action(x0, T, N, M, diffusion, D);
        table.values.push_back(rep.value);
        if (rep.value < best) {
            best = rep.value;
            table.best_index = i;
        }
    }
    return table;
}

} // namespace exitrate
