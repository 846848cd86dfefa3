#include "exitrate/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "exitrate/rng.hpp"

namespace exitrate {

int ExitSampleSet::censored_count() const {
    int c = 0;
    for (const auto& r : per_run) {
        if (!r) ++c;
    }
    return c;
}

std::vector<double> ExitSampleSet::exit_times() const {
    std::vector<double> out;
    out.reserve(per_run.size());
    for (const auto& r : per_run) {
        if (r) out.push_back(*r);
    }
    return out;
}

std::vector<double> ExitSampleSet::sorted_exit_times() const {
    std::vector<double> out = exit_times();
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<double> simulate_exit(const Drift& drift, const DiffusionSpec& diffusion,
                                    double epsilon, const Vector& x0, const Domain& D, double dt,
                                    double t_max, std::uint64_t seed) {
    if (!(dt > 0.0)) {
        throw PreconditionError("simulate_exit requires dt > 0");
    }
    if (!D.contains(x0)) {
        throw PreconditionError("simulate_exit: x0 must lie in the open domain D");
    }
    const Eigen::Index d = x0.size();
    if (drift.M.rows() != d || drift.M.cols() != d || diffusion.dim() != d) {
        throw DimensionError("simulate_exit: drift/diffusion dimensions do not match x0");
    }

    const CounterRng rng(seed);
    const double noise_scale = std::sqrt(epsilon * dt);
    const bool constant_mod = diffusion.modulation().kind == ModulationKind::Constant;
    const Matrix& sigma0 = diffusion.base();
    const long n_steps = static_cast<long>(std::ceil(t_max / dt));

    Vector x = x0;
    Vector b(d);
    Vector xi(d);
    Vector noise(d);
    for (long k = 0; k < n_steps; ++k) {
        b.noalias() = drift.M * x;
        if (drift.control) b += drift.control(x);
        if (epsilon > 0.0) {
            const std::uint64_t base = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(d);
            for (Eigen::Index j = 0; j < d; ++j) {
                xi[j] = rng.normal(base + static_cast<std::uint64_t>(j));
            }
            noise.noalias() = sigma0 * xi;
            if (!constant_mod) noise *= diffusion.modulation().value(x);
            x += dt * b + noise_scale * noise;
        } else {
            x += dt * b;
        }
        if (!x.allFinite()) {
            throw NumericError("simulate_exit: state blew up at step " + std::to_string(k + 1));
        }
        if (!D.contains(x)) {
            return static_cast<double>(k + 1) * dt; // exit recorded at step end
        }
    }
    return std::nullopt;
}

ExitSampleSet sample_exit_times(const Drift& drift, const DiffusionSpec& diffusion, double epsilon,
                                const Vector& x0, const Domain& D, double dt, double t_max, int n,
                                std::uint64_t base_seed, int threads) {
    if (n < 1) {
        throw PreconditionError("sample_exit_times requires at least one run");
    }
    ExitSampleSet set;
    set.per_run.assign(static_cast<std::size_t>(n), std::nullopt);
    set.meta = ExitSampleMeta{epsilon, dt, t_max, base_seed, n};

    auto worker = [&](int begin, int end) {
        for (int run = begin; run < end; ++run) {
            try {
                set.per_run[static_cast<std::size_t>(run)] =
                    simulate_exit(drift, diffusion, epsilon, x0, D, dt, t_max,
                                  base_seed + static_cast<std::uint64_t>(run));
            } catch (const Error& e) {
                throw Error(e.kind(), "run " + std::to_string(run) + ": " + e.what());
            }
        }
    };

    const int k = std::max(1, std::min(threads, n));
    if (k == 1) {
        worker(0, n);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
        const int chunk = (n + k - 1) / k;
        for (int t = 0; t < k; ++t) {
            const int begin = t * chunk;
            const int end = std::min(n, begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                try {
                    worker(begin, end);
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return set;
}

std::vector<double> survival_curve(const ExitSampleSet& samples, const std::vector<double>& t_grid) {
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
        if (!(t_grid[i] < t_grid[i + 1])) {
            throw PreconditionError("survival_curve: t_grid must be strictly increasing");
        }
    }
    const std::vector<double> sorted = samples.sorted_exit_times();
    const int n = static_cast<int>(samples.per_run.size());
    const int censored = samples.censored_count();
    std::vector<double> s;
    s.reserve(t_grid.size());
    for (double t : t_grid) {
        // runs with exit time > t, plus censored runs while t <= t_max
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        long surviving = static_cast<long>(sorted.end() - it);
        if (t <= samples.meta.t_max) surviving += censored;
        s.push_back(static_cast<double>(surviving) / static_cast<double>(n));
    }
    return s;
}

std::pair<double, double> default_rate_window(const ExitSampleSet& samples) {
    const std::vector<double> sorted = samples.sorted_exit_times();
    if (sorted.size() < 2) {
        throw TailStarvedError("not enough exits to choose a tail window");
    }
    const auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * sorted[lo] + w * sorted[hi];
    };
    return {quantile(0.5), quantile(0.9)};
}

RateEstimate estimate_exit_rate(const ExitSampleSet& samples,
                                std::optional<std::pair<double, double>> window) {
    const auto [t_lo, t_hi] = window ? *window : default_rate_window(samples);
    if (!(t_lo < t_hi) || t_hi > samples.meta.t_max) {
        throw PreconditionError("estimate_exit_rate: window must satisfy t_lo < t_hi <= t_max");
    }
    const std::vector<double> sorted = samples.sorted_exit_times();
    const int n = static_cast<int>(samples.per_run.size());
    const int censored = samples.censored_count();

    // Abscissae are the observed exit times inside the window; the survival
    // level just after the j-th sorted exit is (n - j - 1 + censored)/n.
    std::vector<double> ts, logs;
    double last_s = -1.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        const double t = sorted[j];
        if (t < t_lo || t > t_hi) continue;
        const double s =
            static_cast<double>(n - static_cast<long>(j) - 1 + censored) / static_cast<double>(n);
        if (s <= 0.0) break;
        if (s == last_s) continue; // ties collapse to one survival level
        last_s = s;
        ts.push_back(t);
        logs.push_back(std::log(s));
    }

    const double tail_mass = survival_curve(samples, {t_hi})[0];
    if (tail_mass < 5.0 / static_cast<double>(n)) {
        throw TailStarvedError("survival mass at the window end is below 5/N; "
                               "increase the sample count or shrink the window");
    }
    if (ts.size() < 10) {
        throw TailStarvedError("fewer than 10 distinct survival values in the window");
    }

    // Ordinary least squares of log S on t.
    const std::size_t m = ts.size();
    double t_mean = 0.0, y_mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        t_mean += ts[i];
        y_mean += logs[i];
    }
    t_mean /= static_cast<double>(m);
    y_mean /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dt_ = ts[i] - t_mean;
        const double dy = logs[i] - y_mean;
        sxx += dt_ * dt_;
        sxy += dt_ * dy;
        syy += dy * dy;
    }
    const double slope = sxy / sxx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double fit = y_mean + slope * (ts[i] - t_mean);
        ssr += (logs[i] - fit) * (logs[i] - fit);
    }
    const double sigma2 = ssr / static_cast<double>(m > 2 ? m - 2 : 1);

    RateEstimate est;
    est.rate = -slope;
    est.stderr_ = std::sqrt(sigma2 / sxx);
    est.t_lo = t_lo;
    est.t_hi = t_hi;
    est.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    if (!std::isfinite(est.rate)) {
        throw NumericError("estimate_exit_rate: regression produced a non-finite rate");
    }
    return est;
}

} // namespace exitrate
