#include "exitrate/pareto.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace exitrate {

bool dominates(const RateVector& a, const RateVector& b) {
    if (a.size() != b.size()) {
        throw DimensionError("dominates: rate vectors have different lengths");
    }
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> pareto_front(std::vector<ParetoRecord>& records) {
    if (records.empty()) {
        throw PreconditionError("pareto_front needs at least one record");
    }
    for (auto& r : records) r.dominated = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = 0; j < records.size(); ++j) {
            if (i == j) continue;
            if (dominates(records[j].rates, records[i].rates)) {
                records[i].dominated = true;
                break;
            }
        }
    }
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].dominated) front.push_back(i);
    }
    return front;
}

WeightVector::WeightVector(std::vector<double> w) : omega(std::move(w)) {
    if (omega.empty()) {
        throw PreconditionError("weight vector must be nonempty");
    }
    double sum = 0.0;
    for (double x : omega) {
        if (!(x > 0.0)) {
            throw PreconditionError("weights must be strictly positive");
        }
        sum += x;
    }
    for (double& x : omega) x /= sum;
}

double WeightVector::utility(const RateVector& rates) const {
    if (rates.size() != omega.size()) {
        throw DimensionError("weight/rate length mismatch");
    }
    double u = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) u += omega[i] * rates[i];
    return u;
}

std::size_t scalarize(const std::vector<ParetoRecord>& records, const WeightVector& weights) {
    if (records.empty()) {
        throw PreconditionError("scalarize needs at least one record");
    }
    std::size_t best = 0;
    double best_u = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double u = weights.utility(records[i].rates);
        if (u < best_u) {
            best_u = u;
            best = i;
        }
    }
    return best;
}

SweepResult sweep(const MultiChannelSystem& system, const std::vector<FeedbackTuple>& candidates,
                  const ControlSpec& controls, const DiffusionSpec& diffusion, double epsilon,
                  const OperatorGrid& grid, const Domain& D, const SweepOptions& options) {
    if (candidates.empty()) {
        throw PreconditionError("sweep needs at least one feedback candidate");
    }
    SweepResult result;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const Matrix M = closed_loop(system, candidates[c]);
        const double horizon = options.invariant_horizon > 0.0 ? options.invariant_horizon
                                                               : default_invariant_horizon(M);
        const InvariantSetEstimate inv = estimate_invariant_set(
            M, D, options.invariant_resolution, horizon, options.invariant_dt);
        if (!inv.nonempty) {
            result.excluded.emplace_back(
                c, "invariant-set estimate in D is empty up to horizon " + std::to_string(horizon));
            continue;
        }
        const std::vector<HjbSolution> sols =
            rate_vector_solutions(system, candidates[c], controls, diffusion, epsilon, grid);
        ParetoRecord rec{c, candidates[c], {}, false, {}};
        for (const HjbSolution& s : sols) {
            rec.rates.push_back(s.pair.lambda);
            rec.provenance.push_back(ChannelSummary{s.pair.lambda, s.sweeps, s.trace});
        }
        result.records.push_back(std::move(rec));
    }
    if (result.records.empty()) {
        throw PreconditionError(
            "every feedback candidate failed the invariant-set requirement; the admissible "
            "class is empty for this domain");
    }
    pareto_front(result.records);
    return result;
}

} // namespace exitrate
