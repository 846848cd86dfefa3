#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exitrate/model.hpp"

namespace exitrate {

/// Simulation block of the run configuration.
struct SimParams {
    int samples = 10000;
    double dt = 1e-3;
    double t_max = 50.0;
    std::uint64_t seed = 12345;
    int threads = 1;
    std::optional<std::pair<double, double>> window;
};

/// Invariant-set estimation block.
struct InvariantParams {
    int resolution = 15;
    double dt = 0.02;
    double horizon = 0.0; // 0 -> per-closed-loop heuristic
};

/// Run block: orchestration knobs shared by the CLI subcommands.
struct RunParams {
    Vector x0;
    std::vector<int> grid_resolution;
    std::vector<double> t_schedule{2.0, 4.0, 8.0};
    int action_steps = 64;
    std::vector<std::vector<double>> weights;
    int candidate = 0;
    SimParams sim;
    InvariantParams invariant;
    std::string out_dir = "out";
    bool dump_psi = false;
};

/// Fully validated run configuration: every block has already passed its
/// module's structural checks.
struct RunConfig {
    MultiChannelSystem system;
    std::vector<FeedbackTuple> feedback_candidates;
    Domain domain;
    DiffusionSpec diffusion;
    ControlSpec controls;
    std::vector<double> epsilons;
    RunParams run;
};

/// Parses and validates JSON configuration text. Collects every problem it
/// finds (syntax errors aside) and throws a single ConfigError listing all
/// of them; unknown keys are rejected.
RunConfig parse_config(const std::string& text);

/// parse_config over a file's contents.
RunConfig load_config(const std::string& path);

} // namespace exitrate
