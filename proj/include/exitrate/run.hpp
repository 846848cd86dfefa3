#pragma once

#include <filesystem>
#include <string>

#include "exitrate/config.hpp"
#include "exitrate/io.hpp"
#include "exitrate/verify.hpp"

namespace exitrate {

/// Scalar overrides accepted on the command line.
struct Overrides {
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};

struct RunOutcome {
    std::filesystem::path out_dir;
    bool success = true; // verify: all checks passed
};

/// Dispatches one subcommand (simulate | eig | hjb | action | asymptotics |
/// pareto | verify), writes its outputs and manifest.json under the output
/// directory, and returns where they went.
RunOutcome run_subcommand(const std::string& subcommand, RunConfig config,
                          const std::string& config_text, const Overrides& overrides);

} // namespace exitrate
