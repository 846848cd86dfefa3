#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "exitrate/config.hpp"
#include "exitrate/io.hpp"

namespace exitrate {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;   // deterministic text, safe to digest
    double seconds = 0.0; // reported via manifest timings only
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool all_pass = false;
};

/// Runs the built-in verification suite: fixed oracle problems plus the
/// exponent-ordering check on the supplied reference configuration. Writes
/// one artifact per check and acceptance_report.json into out_dir; files are
/// registered on `manifest`.
VerifyReport run_verify(const RunConfig& reference, std::uint64_t seed,
                        const std::filesystem::path& out_dir, int threads,
                        RunManifest& manifest);

/// Brute-force dynamic program for the 1-D confined path cost: states live
/// on `bins` lattice points over [lo, hi], the start point is exact, and the
/// per-step cost matches the midpoint-quadrature action. Independent of the
/// descent-based minimizer by construction.
double dp_confined_action_1d(double x0, double T, int N, double drift_coeff, double a_const,
                             double lo, double hi, int bins);

} // namespace exitrate
