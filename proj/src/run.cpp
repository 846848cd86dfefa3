#include "exitrate/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "exitrate/action.hpp"
#include "exitrate/elliptic.hpp"
#include "exitrate/flow.hpp"
#include "exitrate/hjb.hpp"
#include "exitrate/pareto.hpp"
#include "exitrate/sde.hpp"
#include "nlohmann/json.hpp"

namespace exitrate {

namespace {

using nlohmann::json;

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

json params_json(const RunConfig& cfg) {
    json j;
    j["epsilon"] = cfg.epsilons;
    j["candidate"] = cfg.run.candidate;
    j["grid_resolution"] = cfg.run.grid_resolution;
    j["x0"] = std::vector<double>(cfg.run.x0.data(), cfg.run.x0.data() + cfg.run.x0.size());
    j["sim"] = {{"samples", cfg.run.sim.samples},
                {"dt", cfg.run.sim.dt},
                {"t_max", cfg.run.sim.t_max},
                {"seed", cfg.run.sim.seed}};
    return j;
}

std::vector<std::string> coord_headers(int d) {
    std::vector<std::string> h;
    for (int i = 1; i <= d; ++i) h.push_back("x" + std::to_string(i));
    return h;
}

void write_psi_csv(const std::filesystem::path& path, const OperatorGrid& grid,
                   const Eigen::VectorXd& psi) {
    std::vector<std::string> header = coord_headers(grid.dim());
    header.push_back("psi");
    CsvWriter csv(header);
    for (std::int64_t k = 0; k < grid.interior_count(); ++k) {
        const Vector x = grid.interior_coords(k);
        std::vector<CsvCell> row;
        for (Eigen::Index i = 0; i < x.size(); ++i) row.emplace_back(x[i]);
        row.emplace_back(psi[k]);
        csv.row(row);
    }
    csv.write(path);
}

void do_simulate(const RunConfig& cfg, const std::filesystem::path& out, RunManifest& manifest) {
    const FeedbackTuple& tuple = cfg.feedback_candidates.at(
        static_cast<std::size_t>(cfg.run.candidate));
    const Matrix M = closed_loop(cfg.system, tuple);
    json summary = params_json(cfg);
    summary["rates"] = json::array();

    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
        const double eps = cfg.epsilons[e];
        Stopwatch watch;
        const ExitSampleSet samples =
            sample_exit_times(Drift(M), cfg.diffusion, eps, cfg.run.x0, cfg.domain,
                              cfg.run.sim.dt, cfg.run.sim.t_max, cfg.run.sim.samples,
                              cfg.run.sim.seed, cfg.run.sim.threads);

        const std::string tag = "eps" + std::to_string(e);
        CsvWriter exits({"run", "exit_time", "censored"});
        for (std::size_t r = 0; r < samples.per_run.size(); ++r) {
            const auto& t = samples.per_run[r];
            exits.row({r, t ? *t : cfg.run.sim.t_max, t ? 0 : 1});
        }
        exits.write(out / ("exit_times_" + tag + ".csv"));
        manifest.add_file(out, "exit_times_" + tag + ".csv");

        CsvWriter surv({"t", "s_hat"});
        std::vector<double> t_grid;
        for (int i = 1; i <= 200; ++i) {
            t_grid.push_back(cfg.run.sim.t_max * static_cast<double>(i) / 200.0);
        }
        const std::vector<double> s = survival_curve(samples, t_grid);
        for (std::size_t i = 0; i < t_grid.size(); ++i) surv.row({t_grid[i], s[i]});
        surv.write(out / ("survival_" + tag + ".csv"));
        manifest.add_file(out, "survival_" + tag + ".csv");

        json entry{{"epsilon", eps}, {"censored", samples.censored_count()}};
        try {
            const RateEstimate rate = estimate_exit_rate(samples, cfg.run.sim.window);
            entry["rate"] = rate.rate;
            entry["stderr"] = rate.stderr_;
            entry["window"] = {rate.t_lo, rate.t_hi};
            entry["r_squared"] = rate.r_squared;
        } catch (const Error& err) {
            entry["rate_error"] = err.what();
        }
        summary["rates"].push_back(entry);
        manifest.add_timing("simulate_" + tag, watch.seconds());
    }
    write_text_file(out / "simulate.json", summary.dump(2) + "\n");
    manifest.add_file(out, "simulate.json");
}

void do_eig(const RunConfig& cfg, const std::filesystem::path& out, RunManifest& manifest) {
    const FeedbackTuple& tuple = cfg.feedback_candidates.at(
        static_cast<std::size_t>(cfg.run.candidate));
    const Matrix M = closed_loop(cfg.system, tuple);
    const OperatorGrid grid = build_grid(cfg.domain, cfg.run.grid_resolution);

    json results = json::array();
    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
        const double eps = cfg.epsilons[e];
        Stopwatch watch;
        const SparseOperator op = discretize(M, cfg.diffusion, eps, grid);
        const EigenPair pair = principal_eigenpair(op);
        const double recheck = verify_residual(op, pair);
        results.push_back({{"epsilon", eps},
                           {"lambda", pair.lambda},
                           {"residual", pair.residual},
                           {"residual_recheck", recheck},
                           {"iterations", pair.iterations}});
        manifest.add_timing("eig_eps" + std::to_string(e), watch.seconds());
        if (cfg.run.dump_psi) {
            const std::string name = "psi_eps" + std::to_string(e) + ".csv";
            write_psi_csv(out / name, grid, pair.psi);
            manifest.add_file(out, name);
        }
    }
    json j = params_json(cfg);
    j["results"] = results;
    write_text_file(out / "eig.json", j.dump(2) + "\n");
    manifest.add_file(out, "eig.json");
}

void do_hjb(const RunConfig& cfg, const std::filesystem::path& out, RunManifest& manifest) {
    const FeedbackTuple& tuple = cfg.feedback_candidates.at(
        static_cast<std::size_t>(cfg.run.candidate));
    const OperatorGrid grid = build_grid(cfg.domain, cfg.run.grid_resolution);

    json results = json::array();
    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
        const double eps = cfg.epsilons[e];
        Stopwatch watch;
        const std::vector<HjbSolution> sols = rate_vector_solutions(
            cfg.system, tuple, cfg.controls, cfg.diffusion, eps, grid);
        json per_eps = json::array();
        for (std::size_t i = 0; i < sols.size(); ++i) {
            const HjbSolution& s = sols[i];
            per_eps.push_back({{"channel", i + 1},
                               {"lambda", s.pair.lambda},
                               {"sweeps", s.sweeps},
                               {"trace", s.trace},
                               {"policy_fixed_point", s.policy_fixed_point}});

            const std::string tag = "eps" + std::to_string(e) + "_ch" + std::to_string(i + 1);
            std::vector<std::string> header = coord_headers(grid.dim());
            for (int u = 1; u <= static_cast<int>(s.policy.values.front().size()); ++u) {
                header.push_back("u" + std::to_string(u));
            }
            CsvWriter policy(header);
            for (std::int64_t k = 0; k < grid.interior_count(); ++k) {
                const Vector x = grid.interior_coords(k);
                std::vector<CsvCell> row;
                for (Eigen::Index c = 0; c < x.size(); ++c) row.emplace_back(x[c]);
                const Vector& u = s.policy.values[static_cast<std::size_t>(k)];
                for (Eigen::Index c = 0; c < u.size(); ++c) row.emplace_back(u[c]);
                policy.row(row);
            }
            policy.write(out / ("policy_" + tag + ".csv"));
            manifest.add_file(out, "policy_" + tag + ".csv");

            write_psi_csv(out / ("psi_" + tag + ".csv"), grid, s.pair.psi);
            manifest.add_file(out, "psi_" + tag + ".csv");
        }
        results.push_back({{"epsilon", eps}, {"channels", per_eps}});
        manifest.add_timing("hjb_eps" + std::to_string(e), watch.seconds());
    }
    json j = params_json(cfg);
    j["results"] = results;
    write_text_file(out / "hjb.json", j.dump(2) + "\n");
    manifest.add_file(out, "hjb.json");
}

void do_action(const RunConfig& cfg, const std::filesystem::path& out, RunManifest& manifest) {
    Stopwatch watch;
    const double T = cfg.run.t_schedule.back();
    const SelectionTable sel =
        minimal_action_selection(cfg.system, cfg.feedback_candidates, cfg.run.x0, T,
                                 cfg.run.action_steps, cfg.diffusion, cfg.domain);
    const Matrix M = closed_loop(cfg.system,
                                 cfg.feedback_candidates[sel.best_index]);
    const ConfinementRateTable table =
        estimate_r(cfg.run.x0, M, cfg.diffusion, cfg.domain, cfg.run.t_schedule);

    CsvWriter per_t({"T", "inf_action", "action_per_T"});
    for (std::size_t i = 0; i < table.horizons.size(); ++i) {
        per_t.row({table.horizons[i], table.values[i], table.value_per_t[i]});
    }
    per_t.write(out / "action_per_horizon.csv");
    manifest.add_file(out, "action_per_horizon.csv");

    const ActionReport rep =
        minimize_action(cfg.run.x0, T, cfg.run.action_steps, M, cfg.diffusion, cfg.domain);
    std::vector<std::string> header{"k", "t"};
    for (const auto& h : coord_headers(cfg.system.dim())) header.push_back(h);
    CsvWriter path_csv(header);
    for (std::size_t k = 0; k < rep.path.states.size(); ++k) {
        std::vector<CsvCell> row{k, static_cast<double>(k) * rep.path.dt()};
        for (Eigen::Index c = 0; c < rep.path.states[k].size(); ++c) {
            row.emplace_back(rep.path.states[k][c]);
        }
        path_csv.row(row);
    }
    path_csv.write(out / "minimizing_path.csv");
    manifest.add_file(out, "minimizing_path.csv");

    json j = params_json(cfg);
    j["selected_candidate"] = sel.best_index;
    j["candidate_actions"] = sel.values;
    j["r_hat"] = table.r_hat;
    j["stabilized"] = table.stabilized;
    j["min_action_final_T"] = rep.value;
    j["converged"] = rep.converged;
    write_text_file(out / "action.json", j.dump(2) + "\n");
    manifest.add_file(out, "action.json");
    manifest.add_timing("action", watch.seconds());
}

void do_asymptotics(const RunConfig& cfg, const std::filesystem::path& out,
                    RunManifest& manifest) {
    Stopwatch watch;
    if (cfg.epsilons.size() < 3) {
        throw PreconditionError("asymptotics needs at least 3 epsilon values in the config");
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

    CsvWriter pairs_csv({"scope", "epsilon", "lambda", "minus_eps_log_lambda"});
    for (const auto& [e, l] : loop_pairs) {
        pairs_csv.row({"closed_loop", e, l, -e * std::log(l)});
    }

    json channels = json::array();
    std::vector<double> channel_r;
    for (int i = 0; i < cfg.system.channels(); ++i) {
        std::vector<std::pair<double, double>> pairs;
        for (double eps : eps_sorted) {
            const ChannelProblem prob(cfg.system, star, i, cfg.controls.channel(i),
                                      cfg.diffusion, eps);
            const HjbSolution sol = policy_iteration(prob, grid);
            pairs.emplace_back(eps, sol.pair.lambda);
            pairs_csv.row({"channel" + std::to_string(i + 1), eps, sol.pair.lambda,
                           -eps * std::log(sol.pair.lambda)});
        }
        const ExponentFit fit = extrapolate_rate_exponent(pairs);
        channel_r.push_back(fit.r);
        channels.push_back({{"channel", i + 1}, {"r", fit.r}, {"slope", fit.slope}});
    }
    pairs_csv.write(out / "asymptotics_pairs.csv");
    manifest.add_file(out, "asymptotics_pairs.csv");

    const MarginCheck margin = corollary_check(loop_fit.r, channel_r);
    json j = params_json(cfg);
    j["selected_candidate"] = sel.best_index;
    j["closed_loop"] = {{"r", loop_fit.r}, {"slope", loop_fit.slope},
                        {"residuals", loop_fit.residuals}};
    j["channels"] = channels;
    j["margin"] = margin.margin;
    j["holds"] = margin.holds;
    write_text_file(out / "asymptotics.json", j.dump(2) + "\n");
    manifest.add_file(out, "asymptotics.json");
    manifest.add_timing("asymptotics", watch.seconds());
}

void do_pareto(const RunConfig& cfg, const std::filesystem::path& out, RunManifest& manifest) {
    Stopwatch watch;
    const OperatorGrid grid = build_grid(cfg.domain, cfg.run.grid_resolution);
    SweepOptions options;
    options.invariant_resolution = cfg.run.invariant.resolution;
    options.invariant_dt = cfg.run.invariant.dt;
    options.invariant_horizon = cfg.run.invariant.horizon;
    const double eps = cfg.epsilons.front();

    SweepResult sweep_result = sweep(cfg.system, cfg.feedback_candidates, cfg.controls,
                                     cfg.diffusion, eps, grid, cfg.domain, options);

    const int n = cfg.system.channels();
    std::vector<std::string> header{"candidate"};
    for (int i = 1; i <= n; ++i) header.push_back("lambda_" + std::to_string(i));
    header.push_back("dominated");
    CsvWriter records_csv(header);
    CsvWriter front_csv(header);
    for (const auto& rec : sweep_result.records) {
        std::vector<CsvCell> row{rec.candidate_index};
        for (double r : rec.rates) row.emplace_back(r);
        row.emplace_back(rec.dominated ? 1 : 0);
        records_csv.row(row);
        if (!rec.dominated) front_csv.row(row);
    }
    records_csv.write(out / "pareto_records.csv");
    manifest.add_file(out, "pareto_records.csv");
    front_csv.write(out / "pareto_front.csv");
    manifest.add_file(out, "pareto_front.csv");

    std::vector<std::vector<double>> weights = cfg.run.weights;
    if (weights.empty()) {
        weights.push_back(std::vector<double>(static_cast<std::size_t>(n),
                                              1.0 / static_cast<double>(n)));
    }
    std::vector<std::string> sc_header;
    for (int i = 1; i <= n; ++i) sc_header.push_back("omega_" + std::to_string(i));
    sc_header.push_back("chosen_candidate");
    sc_header.push_back("utility");
    CsvWriter scalarization(sc_header);
    for (const auto& w : weights) {
        const WeightVector wv(w);
        const std::size_t pick = scalarize(sweep_result.records, wv);
        std::vector<CsvCell> row;
        for (double x : wv.omega) row.emplace_back(x);
        row.emplace_back(sweep_result.records[pick].candidate_index);
        row.emplace_back(wv.utility(sweep_result.records[pick].rates));
        scalarization.row(row);
    }
    scalarization.write(out / "scalarization.csv");
    manifest.add_file(out, "scalarization.csv");

    // Invariant-set estimate per candidate: one row per bounding-box grid
    // node with its classification flag.
    for (std::size_t c = 0; c < cfg.feedback_candidates.size(); ++c) {
        const Matrix M = closed_loop(cfg.system, cfg.feedback_candidates[c]);
        const double horizon = options.invariant_horizon > 0.0 ? options.invariant_horizon
                                                               : default_invariant_horizon(M);
        const std::vector<Vector> nodes =
            grid_nodes_over_bounding_box(cfg.domain, options.invariant_resolution);
        Vector lo, hi;
        cfg.domain.bounding_box(lo, hi);
        const double tol = ((hi - lo) / (options.invariant_resolution - 1)).maxCoeff();
        const std::vector<bool> flags = classify_invariant_nodes(
            M, cfg.domain, nodes, tol, horizon, options.invariant_dt);
        std::vector<std::string> inv_header = coord_headers(cfg.system.dim());
        inv_header.push_back("invariant");
        CsvWriter inv_csv(inv_header);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!cfg.domain.contains_closure(nodes[i])) continue;
            std::vector<CsvCell> row;
            for (Eigen::Index k = 0; k < nodes[i].size(); ++k) row.emplace_back(nodes[i][k]);
            row.emplace_back(flags[i] ? 1 : 0);
            inv_csv.row(row);
        }
        const std::string name = "invariant_candidate" + std::to_string(c) + ".csv";
        inv_csv.write(out / name);
        manifest.add_file(out, name);
    }

    json j = params_json(cfg);
    j["excluded"] = json::array();
    for (const auto& [idx, reason] : sweep_result.excluded) {
        j["excluded"].push_back({{"candidate", idx}, {"reason", reason}});
    }
    write_text_file(out / "pareto.json", j.dump(2) + "\n");
    manifest.add_file(out, "pareto.json");
    manifest.add_timing("pareto", watch.seconds());
}

} // namespace

RunOutcome run_subcommand(const std::string& subcommand, RunConfig config,
                          const std::string& config_text, const Overrides& overrides) {
    if (overrides.epsilon) config.epsilons = {*overrides.epsilon};
    if (overrides.seed) config.run.sim.seed = *overrides.seed;
    if (overrides.threads) config.run.sim.threads = std::max(1, *overrides.threads);
    if (overrides.out_dir) config.run.out_dir = *overrides.out_dir;

    const std::filesystem::path out(config.run.out_dir);
    std::filesystem::create_directories(out);
    RunManifest manifest(subcommand, sha256_hex(config_text), config.run.sim.seed);

    RunOutcome outcome;
    outcome.out_dir = out;
    if (subcommand == "simulate") {
        do_simulate(config, out, manifest);
    } else if (subcommand == "eig") {
        do_eig(config, out, manifest);
    } else if (subcommand == "hjb") {
        do_hjb(config, out, manifest);
    } else if (subcommand == "action") {
        do_action(config, out, manifest);
    } else if (subcommand == "asymptotics") {
        do_asymptotics(config, out, manifest);
    } else if (subcommand == "pareto") {
        do_pareto(config, out, manifest);
    } else if (subcommand == "verify") {
        const VerifyReport report =
            run_verify(config, config.run.sim.seed, out, config.run.sim.threads, manifest);
        outcome.success = report.all_pass;
    } else {
        throw PreconditionError("unknown subcommand: " + subcommand);
    }
    manifest.write(out);
    return outcome;
}

} // namespace exitrate
