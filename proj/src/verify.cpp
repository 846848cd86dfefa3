#include "exitrate/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "exitrate/action.hpp"
#include "exitrate/elliptic.hpp"
#include "exitrate/flow.hpp"
#include "exitrate/hjb.hpp"
#include "exitrate/pareto.hpp"
#include "exitrate/rng.hpp"
#include "exitrate/sde.hpp"
#include "nlohmann/json.hpp"

namespace exitrate {

namespace {

using nlohmann::json;

DiffusionSpec unit_diffusion(int d) {
    return DiffusionSpec(Matrix::Identity(d, d));
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------
// 1. Pure-diffusion eigenvalue against the closed-form Dirichlet value, plus
//    exact linearity of lambda in epsilon for drift-free operators.
CheckResult check_eig_analytic(const std::filesystem::path& out_dir, RunManifest& manifest) {
    CheckResult res{"analytic_eigenvalue", false, "", 0.0};
    const Domain D = Domain::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
    const OperatorGrid grid = build_grid(D, 202); // 200 interior nodes
    const DiffusionSpec diff = unit_diffusion(1);
    const Matrix M = Matrix::Zero(1, 1);

    const EigenPair p2 = principal_eigenpair(discretize(M, diff, 2.0, grid));
    const EigenPair p4 = principal_eigenpair(discretize(M, diff, 4.0, grid));
    const EigenPair p6 = principal_eigenpair(discretize(M, diff, 6.0, grid));

    const double exact = std::numbers::pi * std::numbers::pi / 4.0;
    const double rel_err = std::abs(p2.lambda - exact) / exact;
    const double lin2 = std::abs(p4.lambda - 2.0 * p2.lambda) / p4.lambda;
    const double lin3 = std::abs(p6.lambda - 3.0 * p2.lambda) / p6.lambda;

    res.pass = rel_err <= 0.01 && lin2 <= 1e-9 && lin3 <= 1e-9;
    res.detail = "lambda=" + fmt(p2.lambda) + " rel_err=" + fmt(rel_err) +
                 " linearity2=" + fmt(lin2) + " linearity3=" + fmt(lin3);

    json j{{"lambda", p2.lambda},       {"exact", exact},
           {"rel_err", rel_err},        {"residual", p2.residual},
           {"linearity_c2", lin2},      {"linearity_c3", lin3},
           {"interior_nodes", 200}};
    write_text_file(out_dir / "analytic_eigenvalue.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "analytic_eigenvalue.json");
    return res;
}

// ---------------------------------------------------------------------------
// 2. Monte Carlo exit rate against the grid eigenvalue on the 1-D
//    Ornstein-Uhlenbeck confinement problem.
CheckResult check_mc_pde(const std::filesystem::path& out_dir, std::uint64_t seed, int threads,
                         RunManifest& manifest) {
    CheckResult res{"mc_pde_agreement", false, "", 0.0};
    const Domain D = Domain::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
    const DiffusionSpec diff = unit_diffusion(1);
    Matrix M(1, 1);
    M << -1.0;
    const double eps = 0.5;

    const OperatorGrid grid = build_grid(D, 801);
    const EigenPair pde = principal_eigenpair(discretize(M, diff, eps, grid));

    const Vector x0 = Vector::Zero(1);
    const ExitSampleSet samples =
        sample_exit_times(Drift(M), diff, eps, x0, D, 1e-3, 40.0, 20000, seed, threads);
    const RateEstimate mc = estimate_exit_rate(samples);

    const double rel = std::abs(pde.lambda - mc.rate) / pde.lambda;
    res.pass = rel <= 0.10;
    res.detail = "lambda_pde=" + fmt(pde.lambda) + " lambda_mc=" + fmt(mc.rate) +
                 " rel_diff=" + fmt(rel) + " censored=" + std::to_string(samples.censored_count());

    CsvWriter csv({"t", "s_hat"});
    std::vector<double> t_grid;
    for (int i = 1; i <= 200; ++i) t_grid.push_back(40.0 * i / 200.0);
    const std::vector<double> s = survival_curve(samples, t_grid);
    for (std::size_t i = 0; i < t_grid.size(); ++i) csv.row({t_grid[i], s[i]});
    csv.write(out_dir / "mc_pde_survival.csv");
    manifest.add_file(out_dir, "mc_pde_survival.csv");

    json j{{"lambda_pde", pde.lambda},
           {"lambda_mc", mc.rate},
           {"mc_stderr", mc.stderr_},
           {"window", {mc.t_lo, mc.t_hi}},
           {"r_squared", mc.r_squared},
           {"rel_diff", rel},
           {"samples", samples.meta.samples},
           {"censored", samples.censored_count()}};
    write_text_file(out_dir / "mc_pde.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "mc_pde.json");
    return res;
}

// ---------------------------------------------------------------------------
// 3. -eps log lambda extrapolation on the same OU problem against the
//    quadratic confinement exponent.
CheckResult check_exponent(const std::filesystem::path& out_dir, RunManifest& manifest) {
    CheckResult res{"exponent_extrapolation", false, "", 0.0};
    const Domain D = Domain::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
    const DiffusionSpec diff = unit_diffusion(1);
    Matrix M(1, 1);
    M << -1.0;

    const OperatorGrid grid = build_grid(D, 4001);
    std::vector<std::pair<double, double>> pairs;
    for (double eps : {0.5, 0.25, 0.125, 0.0625}) {
        const EigenPair p = principal_eigenpair(discretize(M, diff, eps, grid));
        pairs.emplace_back(eps, p.lambda);
    }
    const ExponentFit fit = extrapolate_rate_exponent(pairs);
    res.pass = std::abs(fit.r - 1.0) <= 0.1;
    res.detail = "intercept=" + fmt(fit.r) + " slope=" + fmt(fit.slope);

    CsvWriter csv({"epsilon", "lambda", "minus_eps_log_lambda", "fit_residual"});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        csv.row({pairs[i].first, pairs[i].second,
                 -pairs[i].first * std::log(pairs[i].second), fit.residuals[i]});
    }
    csv.write(out_dir / "exponent_fit.csv");
    manifest.add_file(out_dir, "exponent_fit.csv");
    return res;
}

// ---------------------------------------------------------------------------
// 4. Policy iteration beats every fixed policy on the 1-D controlled
//    problem; trace monotone; controlled rate below the uncontrolled one.
CheckResult check_hjb_optimality(const std::filesystem::path& out_dir, RunManifest& manifest) {
    CheckResult res{"hjb_optimality", false, "", 0.0};
    const Domain D = Domain::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
    const DiffusionSpec diff = unit_diffusion(1);
    Matrix A(1, 1), B(1, 1);
    A << 0.5;
    B << 1.0;
    const MultiChannelSystem sys(A, {B});
    const FeedbackTuple zero({Matrix::Zero(1, 1)});
    const ControlBox box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
    const double eps = 0.5;
    const double tol = 1e-8;
    const OperatorGrid grid = build_grid(D, 401);

    const ChannelProblem prob(sys, zero, 0, box, diff, eps);
    const HjbSolution sol = policy_iteration(prob, grid, tol);

    bool fixed_ok = true;
    double worst_gap = std::numeric_limits<double>::infinity();
    CsvWriter csv({"u", "lambda_fixed"});
    for (int k = 0; k <= 20; ++k) {
        const double u = -1.0 + 0.1 * k;
        PolicyField constant;
        constant.channel = 0;
        constant.values.assign(static_cast<std::size_t>(grid.interior_count()),
                               Vector::Constant(1, u));
        const EigenPair p = principal_eigenpair(assemble_channel_operator(prob, grid, constant));
        csv.row({u, p.lambda});
        worst_gap = std::min(worst_gap, p.lambda - sol.pair.lambda);
        if (sol.pair.lambda > p.lambda + 1e-8) fixed_ok = false;
    }
    // Hand-built centering bang-bang policy.
    PolicyField centering;
    centering.channel = 0;
    for (std::int64_t k = 0; k < grid.interior_count(); ++k) {
        const double x = grid.interior_coords(k)[0];
        centering.values.push_back(Vector::Constant(1, x < 0.0 ? 1.0 : (x > 0.0 ? -1.0 : 0.0)));
    }
    const EigenPair bb = principal_eigenpair(assemble_channel_operator(prob, grid, centering));
    if (sol.pair.lambda > bb.lambda + 1e-8) fixed_ok = false;

    bool trace_ok = true;
    for (std::size_t i = 1; i < sol.trace.size(); ++i) {
        if (sol.trace[i] > sol.trace[i - 1] + 10.0 * tol * std::max(1.0, sol.trace[i - 1])) {
            trace_ok = false;
        }
    }
    const EigenPair uncontrolled = principal_eigenpair(discretize(A, diff, eps, grid));
    const bool below_uncontrolled = sol.pair.lambda <= uncontrolled.lambda + 1e-8;

    res.pass = fixed_ok && trace_ok && below_uncontrolled;
    res.detail = "lambda_opt=" + fmt(sol.pair.lambda) + " lambda_bangbang=" + fmt(bb.lambda) +
                 " lambda_uncontrolled=" + fmt(uncontrolled.lambda) +
                 " sweeps=" + std::to_string(sol.sweeps);

    csv.write(out_dir / "hjb_fixed_policies.csv");
    manifest.add_file(out_dir, "hjb_fixed_policies.csv");
    json j{{"lambda_opt", sol.pair.lambda},
           {"lambda_uncontrolled", uncontrolled.lambda},
           {"lambda_centering", bb.lambda},
           {"trace", sol.trace},
           {"policy_fixed_point", sol.policy_fixed_point}};
    write_text_file(out_dir / "hjb_optimality.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "hjb_optimality.json");
    return res;
}

// ---------------------------------------------------------------------------
// 5. Resting at a stable equilibrium costs nothing; the analytic path
//    gradient matches central finite differences.
CheckResult check_action_anchor(const std::filesystem::path& out_dir, RunManifest& manifest) {
    CheckResult res{"action_zero_anchor", false, "", 0.0};
    const Domain D = Domain::ball(Vector::Zero(2), 1.0);
    const DiffusionSpec diff = unit_diffusion(2);
    const Matrix M = -Matrix::Identity(2, 2);
    const Vector x0 = Vector::Zero(2);

    const ActionReport rep = minimize_action(x0, 4.0, 64, M, diff, D);
    const ConfinementRateTable table = estimate_r(x0, M, diff, D, {2.0, 4.0, 8.0});

    // Finite-difference audit of the analytic gradient on a rough path, for
    // both modulation families.
    const CounterRng rng(0xD1FF5u);
    double worst_rel = 0.0;
    std::uint64_t counter = 0;
    for (const bool saturating : {false, true}) {
        const DiffusionSpec d2 = saturating
            ? DiffusionSpec(Matrix::Identity(2, 2), Modulation{ModulationKind::Saturating, 0.5})
            : diff;
        DiscretePath path;
        path.horizon = 2.0;
        const int N = 24;
        path.states.push_back(x0);
        for (int k = 1; k <= N; ++k) {
            Vector s(2);
            s[0] = 0.6 * rng.normal(counter++);
            s[1] = 0.6 * rng.normal(counter++);
            path.states.push_back(D.project(s));
        }
        const Eigen::VectorXd g = action_gradient(path, M, d2);
        for (int probe = 0; probe < 10; ++probe) {
            Eigen::VectorXd dir(g.size());
            for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal(counter++);
            dir /= dir.norm();
            const double delta = 1e-6;
            DiscretePath plus = path, minus = path;
            for (int k = 1; k <= N; ++k) {
                plus.states[static_cast<std::size_t>(k)] +=
                    delta * dir.segment(2 * (k - 1), 2);
                minus.states[static_cast<std::size_t>(k)] -=
                    delta * dir.segment(2 * (k - 1), 2);
            }
            const double fd =
                (action_value(plus, M, d2) - action_value(minus, M, d2)) / (2.0 * delta);
            const double an = g.dot(dir);
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-10});
            worst_rel = std::max(worst_rel, rel);
        }
    }

    res.pass = rep.value <= 1e-6 && table.r_hat <= 1e-3 && worst_rel <= 1e-5;
    res.detail = "min_action=" + fmt(rep.value) + " r_hat=" + fmt(table.r_hat) +
                 " grad_fd_rel=" + fmt(worst_rel);

    json j{{"min_action", rep.value},
           {"r_hat", table.r_hat},
           {"stabilized", table.stabilized},
           {"grad_fd_worst_rel", worst_rel},
           {"value_per_t", table.value_per_t}};
    write_text_file(out_dir / "action_zero_anchor.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "action_zero_anchor.json");
    return res;
}

// ---------------------------------------------------------------------------
// 6. Confinement against unstable drift: descent minimizer against the
//    lattice dynamic program.
CheckResult check_action_dp(const std::filesystem::path& out_dir, RunManifest& manifest) {
    CheckResult res{"action_dp_agreement", false, "", 0.0};
    const Domain D = Domain::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
    const DiffusionSpec diff = unit_diffusion(1);
    Matrix M(1, 1);
    M << 1.0;
    const Vector x0 = Vector::Constant(1, 0.9);
    const double T = 1.0;
    const int N = 16;

    const ActionReport rep = minimize_action(x0, T, N, M, diff, D);
    const double dp = dp_confined_action_1d(0.9, T, N, 1.0, 1.0, -1.0, 1.0, 64);
    const double rel = std::abs(rep.value - dp) / dp;
    res.pass = rel <= 0.05;
    res.detail = "descent=" + fmt(rep.value) + " dp=" + fmt(dp) + " rel_diff=" + fmt(rel);

    json j{{"descent", rep.value}, {"dp", dp}, {"rel_diff", rel}, {"steps", N}, {"bins", 64}};
    write_text_file(out_dir / "action_dp.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "action_dp.json");
    return res;
}

// ---------------------------------------------------------------------------
// 7. Dominance/front/scalarization against brute force and the partial-order
//    laws on random data.
CheckResult check_pareto(const std::filesystem::path& out_dir, RunManifest& manifest) {
    CheckResult res{"pareto_laws", false, "", 0.0};
    const CounterRng rng(0xBEEFu);
    std::uint64_t c = 0;

    const FeedbackTuple dummy({Matrix::Zero(1, 1)});
    std::vector<ParetoRecord> records;
    for (int i = 0; i < 200; ++i) {
        RateVector r(3);
        for (double& v : r) v = rng.uniform(c++);
        records.push_back(ParetoRecord{static_cast<std::size_t>(i), dummy, r, false, {}});
    }
    const std::vector<std::size_t> front = pareto_front(records);

    // Brute-force double loop, written independently of pareto_front.
    bool front_ok = true;
    for (std::size_t i = 0; i < records.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < records.size() && !dominated; ++j) {
            if (i == j) continue;
            bool le = true, lt = false;
            for (std::size_t k = 0; k < 3; ++k) {
                if (records[j].rates[k] > records[i].rates[k]) le = false;
                if (records[j].rates[k] < records[i].rates[k]) lt = true;
            }
            dominated = le && lt;
        }
        if (dominated != records[i].dominated) front_ok = false;
    }

    bool scalarize_ok = true;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> w(3);
        for (double& v : w) v = 0.01 + rng.uniform(c++);
        const std::size_t pick = scalarize(records, WeightVector(w));
        if (records[pick].dominated) scalarize_ok = false;
    }

    bool laws_ok = true;
    for (int t = 0; t < 10000; ++t) {
        RateVector a(3), b(3);
        for (double& v : a) v = rng.uniform(c++);
        // Half the pairs are built comparable so the laws see both regimes.
        if (t % 2 == 0) {
            for (std::size_t k = 0; k < 3; ++k) b[k] = a[k] + rng.uniform(c++) * 0.5;
        } else {
            for (double& v : b) v = rng.uniform(c++);
        }
        if (dominates(a, a) || dominates(b, b)) laws_ok = false;            // irreflexive
        if (dominates(a, b) && dominates(b, a)) laws_ok = false;            // antisymmetric
        RateVector cvec(3);
        for (std::size_t k = 0; k < 3; ++k) cvec[k] = b[k] + rng.uniform(c++) * 0.5;
        if (dominates(a, b) && dominates(b, cvec) && !dominates(a, cvec)) { // transitive
            laws_ok = false;
        }
        // Monotone utility: a < b componentwise-with-strict implies smaller
        // weighted sum for every positive weight.
        if (dominates(a, b)) {
            std::vector<double> w(3);
            for (double& v : w) v = 0.01 + rng.uniform(c++);
            const WeightVector wv(w);
            if (!(wv.utility(a) < wv.utility(b))) laws_ok = false;
        }
    }

    res.pass = front_ok && scalarize_ok && laws_ok;
    res.detail = std::string("front_oracle=") + (front_ok ? "ok" : "mismatch") +
                 " scalarize_nondominated=" + (scalarize_ok ? "ok" : "violated") +
                 " order_laws=" + (laws_ok ? "ok" : "violated") +
                 " front_size=" + std::to_string(front.size());

    CsvWriter csv({"index", "r1", "r2", "r3", "dominated"});
    for (const auto& r : records) {
        csv.row({r.candidate_index, r.rates[0], r.rates[1], r.rates[2],
                 r.dominated ? 1 : 0});
    }
    csv.write(out_dir / "pareto_records.csv");
    manifest.add_file(out_dir, "pareto_records.csv");
    return res;
}

// ---------------------------------------------------------------------------
// 8. Invariant-set dichotomy: a confining configuration keeps the exponent
//    stable, an evacuating one keeps the rate bounded below.
CheckResult check_dichotomy(const std::filesystem::path& out_dir, RunManifest& manifest) {
    CheckResult res{"invariant_dichotomy", false, "", 0.0};
    const Matrix M = -Matrix::Identity(2, 2);
    const DiffusionSpec diff = unit_diffusion(2);
    const std::vector<double> eps_list{0.8, 0.4, 0.2};

    // (a) ball at the origin: invariant set nonempty, exponent stabilizes.
    const Domain Da = Domain::ball(Vector::Zero(2), 1.0);
    const InvariantSetEstimate inv_a =
        estimate_invariant_set(M, Da, 21, default_invariant_horizon(M), 0.05);
    const OperatorGrid grid_a = build_grid(Da, 51);
    std::vector<double> y;
    std::vector<double> lambdas_a;
    for (double eps : eps_list) {
        const EigenPair p = principal_eigenpair(discretize(M, diff, eps, grid_a));
        lambdas_a.push_back(p.lambda);
        y.push_back(-eps * std::log(p.lambda));
    }
    const double d1 = std::abs(y[1] - y[0]);
    const double d2 = std::abs(y[2] - y[1]);
    const bool stabilizes = d2 <= 0.8 * d1 + 0.02;

    // (b) ball away from the origin: estimate empty, rate bounded below by
    //     half the deterministic-exit proxy.
    Vector center(2);
    center << 5.0, 0.0;
    const Domain Db = Domain::ball(center, 1.0);
    const InvariantSetEstimate inv_b =
        estimate_invariant_set(M, Db, 21, default_invariant_horizon(M), 0.05);

    double worst_exit = 0.0;
    {
        Vector lo, hi;
        Db.bounding_box(lo, hi);
        for (int i = 0; i < 21; ++i) {
            for (int j = 0; j < 21; ++j) {
                Vector x(2);
                x << lo[0] + (hi[0] - lo[0]) * i / 20.0, lo[1] + (hi[1] - lo[1]) * j / 20.0;
                if (!Db.contains_closure(x)) continue;
                const auto t = exit_time_deterministic(M, x, Db, 0.01, 100.0);
                if (t) worst_exit = std::max(worst_exit, *t);
            }
        }
    }
    const double proxy = 1.0 / worst_exit;
    const OperatorGrid grid_b = build_grid(Db, 151);
    std::vector<double> lambdas_b;
    bool bounded_below = true;
    for (double eps : eps_list) {
        const EigenPair p = principal_eigenpair(discretize(M, diff, eps, grid_b));
        lambdas_b.push_back(p.lambda);
        if (p.lambda < 0.5 * proxy) bounded_below = false;
    }

    res.pass = inv_a.nonempty && stabilizes && !inv_b.nonempty && bounded_below;
    res.detail = std::string("confining_nonempty=") + (inv_a.nonempty ? "true" : "false") +
                 " exponent_diffs=" + fmt(d1) + "," + fmt(d2) +
                 " evacuating_nonempty=" + (inv_b.nonempty ? "true" : "false") +
                 " rate_floor=" + fmt(0.5 * proxy) + " min_rate=" +
                 fmt(*std::min_element(lambdas_b.begin(), lambdas_b.end()));

    json j{{"confining",
            {{"nonempty", inv_a.nonempty},
             {"invariant_nodes", inv_a.nodes.size()},
             {"epsilons", eps_list},
             {"lambdas", lambdas_a},
             {"minus_eps_log_lambda", y}}},
           {"evacuating",
            {{"nonempty", inv_b.nonempty},
             {"deterministic_exit_max", worst_exit},
             {"rate_proxy", proxy},
             {"lambdas", lambdas_b}}}};
    write_text_file(out_dir / "invariant_dichotomy.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "invariant_dichotomy.json");
    return res;
}

// ---------------------------------------------------------------------------
// 9. Exponent ordering on the bundled reference configuration: the selected
//    closed loop's extrapolated exponent dominates every per-channel one.
CheckResult check_exponent_margin(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                  RunManifest& manifest) {
    CheckResult res{"exponent_margin", false, "", 0.0};
    if (cfg.epsilons.size() < 3) {
        res.detail = "reference configuration needs at least 3 epsilon values";
        return res;
    }
    std::vector<double> eps_sorted = cfg.epsilons;
    std::sort(eps_sorted.rbegin(), eps_sorted.rend());

    const double T = cfg.run.t_schedule.back();
    const SelectionTable sel =
        minimal_action_selection(cfg.system, cfg.feedback_candidates, cfg.run.x0, T,
                                 cfg.run.action_steps, cfg.diffusion, cfg.domain);
    const FeedbackTuple& star = cfg.feedback_candidates[sel.best_index];
    const Matrix M = closed_loop(cfg.system, star);
    const OperatorGrid grid = build_grid(cfg.domain, cfg.run.grid_resolution);

    std::vector<std::pair<double, double>> loop_pairs;
    for (double eps : eps_sorted) {
        loop_pairs.emplace_back(
            eps, principal_eigenpair(discretize(M, cfg.diffusion, eps, grid)).lambda);
    }
    const ExponentFit loop_fit = extrapolate_rate_exponent(loop_pairs);

    std::vector<double> channel_r;
    json channels = json::array();
    bool remark_ok = true;
    for (int i = 0; i < cfg.system.channels(); ++i) {
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t e = 0; e < eps_sorted.size(); ++e) {
            const ChannelProblem prob(cfg.system, star, i, cfg.controls.channel(i), cfg.diffusion,
                                      eps_sorted[e]);
            const HjbSolution sol = policy_iteration(prob, grid);
            pairs.emplace_back(eps_sorted[e], sol.pair.lambda);
            // Optimal channel rates never exceed the uncontrolled closed-loop rate.
            if (sol.pair.lambda > loop_pairs[e].second + 1e-8) remark_ok = false;
        }
        const ExponentFit fit = extrapolate_rate_exponent(pairs);
        channel_r.push_back(fit.r);
        json jc{{"channel", i + 1}, {"r", fit.r}, {"slope", fit.slope}, {"pairs", json::array()}};
        for (const auto& [e, l] : pairs) jc["pairs"].push_back({e, l});
        channels.push_back(jc);
    }

    const MarginCheck margin = corollary_check(loop_fit.r, channel_r);
    res.pass = margin.holds && remark_ok;
    res.detail = "r_closed_loop=" + fmt(loop_fit.r) + " margin=" + fmt(margin.margin) +
                 std::string(" rate_ordering=") + (remark_ok ? "ok" : "violated");

    json j{{"selected_candidate", sel.best_index},
           {"selection_values", sel.values},
           {"r_closed_loop", loop_fit.r},
           {"channel_r", channel_r},
           {"margin", margin.margin},
           {"holds", margin.holds},
           {"rate_ordering_ok", remark_ok},
           {"channels", channels}};
    write_text_file(out_dir / "exponent_margin.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "exponent_margin.json");
    return res;
}

} // namespace

double dp_confined_action_1d(double x0, double T, int N, double drift_coeff, double a_const,
                             double lo, double hi, int bins) {
    const double dt = T / N;
    std::vector<double> states(static_cast<std::size_t>(bins));
    for (int i = 0; i < bins; ++i) {
        states[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (bins - 1);
    }
    const auto step_cost = [&](double x, double x_next) {
        const double mid = 0.5 * (x + x_next);
        const double r = (x_next - x) / dt - drift_coeff * mid;
        return 0.5 * dt * r * r / a_const;
    };

    std::vector<double> value(states.size(), 0.0);
    std::vector<double> next(states.size(), 0.0);
    for (int k = N - 1; k >= 1; --k) {
        std::swap(value, next);
        for (std::size_t i = 0; i < states.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < states.size(); ++j) {
                best = std::min(best, step_cost(states[i], states[j]) + next[j]);
            }
            value[i] = best;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < states.size(); ++j) {
        best = std::min(best, step_cost(x0, states[j]) + value[j]);
    }
    return best;
}

VerifyReport run_verify(const RunConfig& reference, std::uint64_t seed,
                        const std::filesystem::path& out_dir, int threads,
                        RunManifest& manifest) {
    std::filesystem::create_directories(out_dir);
    VerifyReport report;

    const auto timed = [&](auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        CheckResult r = fn();
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest.add_timing(r.name, r.seconds);
        report.checks.push_back(std::move(r));
    };

    timed([&] { return check_eig_analytic(out_dir, manifest); });
    timed([&] { return check_mc_pde(out_dir, seed, threads, manifest); });
    timed([&] { return check_exponent(out_dir, manifest); });
    timed([&] { return check_hjb_optimality(out_dir, manifest); });
    timed([&] { return check_action_anchor(out_dir, manifest); });
    timed([&] { return check_action_dp(out_dir, manifest); });
    timed([&] { return check_pareto(out_dir, manifest); });
    timed([&] { return check_dichotomy(out_dir, manifest); });
    timed([&] { return check_exponent_margin(reference, out_dir, manifest); });

    report.all_pass = true;
    for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;

    json j;
    j["all_pass"] = report.all_pass;
    j["checks"] = json::array();
    for (const auto& c : report.checks) {
        j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    write_text_file(out_dir / "acceptance_report.json", j.dump(2) + "\n");
    manifest.add_file(out_dir, "acceptance_report.json");
    return report;
}

} // namespace exitrate
