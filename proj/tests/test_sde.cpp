#include "doctest.h"

#include <cmath>

#include "exitrate/rng.hpp"
#include "exitrate/sde.hpp"

using namespace exitrate;

namespace {

const Domain unit_interval() {
    return Domain::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
}

} // namespace

TEST_CASE("counter rng basics") {
    const CounterRng rng(123);
    CHECK(rng.uniform(0) == rng.uniform(0));
    CHECK(rng.uniform(0) != rng.uniform(1));
    CHECK(CounterRng(124).uniform(0) != rng.uniform(0));

    double mean = 0.0, var = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(static_cast<std::uint64_t>(i));
        mean += z;
        var += z * z;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("noise-free simulation reduces to the deterministic flow") {
    const Domain D = unit_interval();
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    Matrix stable(1, 1);
    stable << -1.0;
    CHECK_FALSE(simulate_exit(Drift(stable), diff, 0.0, Vector::Constant(1, 0.5), D, 1e-3, 10.0, 7)
                    .has_value());

    Matrix unstable(1, 1);
    unstable << 1.0;
    const auto t = simulate_exit(Drift(unstable), diff, 0.0, Vector::Constant(1, 0.5), D, 1e-3,
                                 10.0, 7);
    REQUIRE(t.has_value());
    CHECK(std::abs(*t - std::log(2.0)) <= 2e-3); // within 2 dt of the closed form
}

TEST_CASE("fixed seed gives bit-identical runs") {
    const Domain D = unit_interval();
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    Matrix M(1, 1);
    M << -1.0;
    const auto a = simulate_exit(Drift(M), diff, 0.5, Vector::Zero(1), D, 1e-3, 50.0, 42);
    const auto b = simulate_exit(Drift(M), diff, 0.5, Vector::Zero(1), D, 1e-3, 50.0, 42);
    REQUIRE(a.has_value());
    CHECK(*a == *b);

    const ExitSampleSet s1 = sample_exit_times(Drift(M), diff, 0.5, Vector::Zero(1), D, 1e-3,
                                               50.0, 200, 9001, 1);
    const ExitSampleSet s2 = sample_exit_times(Drift(M), diff, 0.5, Vector::Zero(1), D, 1e-3,
                                               50.0, 200, 9001, 2);
    CHECK(s1.exit_times() == s2.exit_times());
    CHECK(s1.censored_count() == s2.censored_count());
}

TEST_CASE("precondition and blow-up errors") {
    const Domain D = unit_interval();
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    Matrix M(1, 1);
    M << 0.0;
    CHECK_THROWS_AS(
        simulate_exit(Drift(M), diff, 0.5, Vector::Constant(1, 2.0), D, 1e-3, 1.0, 1),
        PreconditionError);
    CHECK_THROWS_AS(sample_exit_times(Drift(M), diff, 0.5, Vector::Zero(1), D, 1e-3, 1.0, 0, 1),
                    PreconditionError);
}

TEST_CASE("survival curve counting") {
    ExitSampleSet s;
    s.meta = ExitSampleMeta{0.5, 1e-3, 10.0, 0, 4};
    for (double t : {1.0, 2.0, 3.0, 4.0}) s.per_run.push_back(t);
    CHECK(survival_curve(s, {1e-9})[0] == 1.0);
    CHECK(survival_curve(s, {0.5})[0] == 1.0);
    CHECK(survival_curve(s, {2.5})[0] == 0.5);
    CHECK(survival_curve(s, {4.5})[0] == 0.0);

    // censoring keeps mass until t_max
    s.per_run.push_back(std::nullopt);
    s.meta.samples = 5;
    CHECK(survival_curve(s, {9.0})[0] == doctest::Approx(0.2));

    const std::vector<double> grid{0.5, 1.5, 2.5, 3.5, 4.5, 9.0};
    const std::vector<double> curve = survival_curve(s, grid);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(curve[i] >= 0.0);
        CHECK(curve[i] <= 1.0);
        if (i > 0) CHECK(curve[i] <= curve[i - 1]);
    }
}

TEST_CASE("independent batches agree within binomial noise") {
    const Domain D = unit_interval();
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    Matrix M(1, 1);
    M << -1.0;
    const int n = 4000;
    const ExitSampleSet s1 = sample_exit_times(Drift(M), diff, 0.5, Vector::Zero(1), D, 2e-3,
                                               30.0, n, 1000, 2);
    const ExitSampleSet s2 = sample_exit_times(Drift(M), diff, 0.5, Vector::Zero(1), D, 2e-3,
                                               30.0, n, 500000, 2);
    const double t_probe = 3.0;
    const double p1 = survival_curve(s1, {t_probe})[0];
    const double p2 = survival_curve(s2, {t_probe})[0];
    const double sigma = std::sqrt(p1 * (1.0 - p1) / n + p2 * (1.0 - p2) / n);
    CHECK(std::abs(p1 - p2) <= 3.0 * sigma + 1e-12);
}

TEST_CASE("rate recovery from a known exponential law") {
    // Draw i.i.d. exponential(rate 2) exit times directly; the regression
    // must recover the rate.
    const CounterRng rng(31337);
    ExitSampleSet s;
    const int n = 100000;
    s.meta = ExitSampleMeta{0.0, 1e-3, 1e9, 31337, n};
    for (int i = 0; i < n; ++i) {
        s.per_run.push_back(-std::log(rng.uniform(static_cast<std::uint64_t>(i))) / 2.0);
    }
    const RateEstimate est = estimate_exit_rate(s);
    CHECK(est.rate == doctest::Approx(2.0).epsilon(0.025));

    // shifting every exit time and the window leaves the slope unchanged
    ExitSampleSet shifted = s;
    const double c = 3.0;
    for (auto& t : shifted.per_run) t = *t + c;
    const RateEstimate base = estimate_exit_rate(s, {{1.0, 2.0}});
    const RateEstimate moved = estimate_exit_rate(shifted, {{1.0 + c, 2.0 + c}});
    CHECK(base.rate == doctest::Approx(moved.rate).epsilon(1e-12));
}

TEST_CASE("tail-starved windows are refused") {
    const CounterRng rng(5);
    ExitSampleSet s;
    const int n = 100;
    s.meta = ExitSampleMeta{0.0, 1e-3, 100.0, 5, n};
    for (int i = 0; i < n; ++i) {
        s.per_run.push_back(-std::log(rng.uniform(static_cast<std::uint64_t>(i))));
    }
    CHECK_THROWS_AS(estimate_exit_rate(s, {{8.0, 99.0}}), TailStarvedError);

    ExitSampleSet tiny;
    tiny.meta = ExitSampleMeta{0.0, 1e-3, 100.0, 1, 4};
    for (double t : {1.0, 2.0, 3.0, 4.0}) tiny.per_run.push_back(t);
    CHECK_THROWS_AS(estimate_exit_rate(tiny, {{0.5, 4.0}}), TailStarvedError);
}

TEST_CASE("halving dt moves the rate by less than the replication noise") {
    // The discretization bias is O(sqrt(dt)) at the boundary; halving dt
    // must move the estimate by less than three standard errors. The
    // within-curve regression stderr understates the run-to-run variance
    // (survival points are autocorrelated), so the standard error here
    // comes from independent batch replications.
    const Domain D = unit_interval();
    const DiffusionSpec diff(Matrix::Identity(1, 1));
    Matrix M(1, 1);
    M << -1.0;
    const std::pair<double, double> window{2.0, 8.0};

    const auto batched_rate = [&](double dt, std::uint64_t seed0) {
        const int batches = 8;
        const int per_batch = 600;
        std::vector<double> rates;
        for (int b = 0; b < batches; ++b) {
            const ExitSampleSet s =
                sample_exit_times(Drift(M), diff, 0.5, Vector::Zero(1), D, dt, 30.0, per_batch,
                                  seed0 + static_cast<std::uint64_t>(b) * 1000003ULL, 2);
            rates.push_back(estimate_exit_rate(s, window).rate);
        }
        double mean = 0.0;
        for (double r : rates) mean += r;
        mean /= batches;
        double var = 0.0;
        for (double r : rates) var += (r - mean) * (r - mean);
        var /= (batches - 1);
        return std::pair<double, double>{mean, std::sqrt(var / batches)};
    };

    const auto [rate_coarse, se_coarse] = batched_rate(2e-3, 101);
    const auto [rate_fine, se_fine] = batched_rate(1e-3, 20101);
    const double se = std::sqrt(se_coarse * se_coarse + se_fine * se_fine);
    CHECK(std::abs(rate_coarse - rate_fine) < 3.0 * se);
}
