#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "exitrate/run.hpp"
#include "exitrate/version.hpp"
#include "nlohmann/json.hpp"

namespace {

void print_error_json(const std::string& kind, const std::string& message,
                      const std::vector<std::string>& issues = {}) {
    nlohmann::json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    if (!issues.empty()) j["error"]["issues"] = issues;
    // Machine-readable errors go to stderr so stdout stays clean for results.
    std::cerr << j.dump() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exit-rate toolkit: exit sampling, principal eigenvalues, controlled "
                 "eigenvalue problems, action minimization and Pareto sweeps for "
                 "multi-channel linear systems under small noise"};
    app.set_version_flag("--version", exitrate::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    int threads = 0;

    const std::vector<std::string> names{"simulate", "eig", "hjb", "action",
                                         "asymptotics", "pareto", "verify"};
    const std::vector<std::string> descriptions{
        "sample first exit times and estimate the survival decay rate",
        "principal eigenpair of the discretized generator on the domain grid",
        "per-channel controlled eigenvalue problems by policy iteration",
        "minimize the path action and estimate the confinement rate",
        "-eps log lambda extrapolation and the exponent-ordering margin",
        "attainable rate vectors, Pareto front and scalarization table",
        "run the built-in verification suite against its oracles"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descriptions[i]);
        sub->add_option("--config", config_path, "path to the JSON run configuration")
            ->required();
        sub->add_option("--out", out_dir, "output directory (overrides run.out_dir)");
        sub->add_option("--epsilon", epsilon, "override: single epsilon value");
        sub->add_option("--seed", seed, "override: simulation seed");
        sub->add_option("--threads", threads, "override: worker threads for sampling");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();
    CLI::App* sub = app.get_subcommands().front();

    try {
        const std::string text = exitrate::read_text_file(config_path);
        exitrate::RunConfig config = exitrate::parse_config(text);

        exitrate::Overrides overrides;
        if (sub->count("--epsilon")) overrides.epsilon = epsilon;
        if (sub->count("--seed")) overrides.seed = seed;
        if (sub->count("--threads")) overrides.threads = threads;
        if (sub->count("--out")) overrides.out_dir = out_dir;

        const exitrate::RunOutcome outcome =
            exitrate::run_subcommand(subcommand, std::move(config), text, overrides);
        std::cout << "outputs written to " << outcome.out_dir.string() << "\n";
        if (!outcome.success) {
            print_error_json("verify", "one or more verification checks failed; see "
                                       "acceptance_report.json");
            return 2;
        }
        return 0;
    } catch (const exitrate::ConfigError& e) {
        print_error_json(e.kind(), "configuration invalid", e.issues());
        return 1;
    } catch (const exitrate::Error& e) {
        print_error_json(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error_json("internal", e.what());
        return 1;
    }
}
