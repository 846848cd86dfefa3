#pragma once

#include "exitrate/flow.hpp"
#include "exitrate/hjb.hpp"

namespace exitrate {

/// Strict componentwise dominance: a <= b everywhere with a < b somewhere.
bool dominates(const RateVector& a, const RateVector& b);

struct ChannelSummary {
    double lambda = 0.0;
    int sweeps = 0;
    std::vector<double> trace;
};

struct ParetoRecord {
    std::size_t candidate_index = 0;
    FeedbackTuple candidate;
    RateVector rates;
    bool dominated = false;
    std::vector<ChannelSummary> provenance;
};

/// Marks dominated flags in place and returns the indices of the
/// non-dominated records (pairwise scan).
std::vector<std::size_t> pareto_front(std::vector<ParetoRecord>& records);

/// Strictly positive weights, normalized to sum 1 on construction.
struct WeightVector {
    std::vector<double> omega;

    explicit WeightVector(std::vector<double> w);

    double utility(const RateVector& rates) const;
};

/// Index of the record minimizing <omega, rates>; ties break to the earliest
/// record.
std::size_t scalarize(const std::vector<ParetoRecord>& records, const WeightVector& weights);

struct SweepOptions {
    int invariant_resolution = 15;
    double invariant_dt = 0.02;
    double invariant_horizon = 0.0; // 0 -> default heuristic per candidate
};

struct SweepResult {
    std::vector<ParetoRecord> records;
    std::vector<std::pair<std::size_t, std::string>> excluded; // candidate index, reason
};

/// Full attainable-rate sweep: candidates whose closed loop has an empty
/// invariant-set estimate in D are excluded (with the reason logged); each
/// survivor gets a per-channel optimal rate vector.
SweepResult sweep(const MultiChannelSystem& system, const std::vector<FeedbackTuple>& candidates,
                  const ControlSpec& controls, const DiffusionSpec& diffusion, double epsilon,
                  const OperatorGrid& grid, const Domain& D, const SweepOptions& options = {});

} // namespace exitrate
