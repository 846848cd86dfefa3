#pragma once

#include "exitrate/elliptic.hpp"
#include "exitrate/sde.hpp"

namespace exitrate {

/// Piecewise-constant control field for one channel: one admissible control
/// vector per interior grid node.
struct PolicyField {
    int channel = 0;
    std::vector<Vector> values; // indexed by interior ordinal

    bool same_values(const PolicyField& other, double tol = 0.0) const;
};

/// One channel's controlled exit problem: every other channel's feedback is
/// frozen, channel `channel` is driven by a control in `control`.
struct ChannelProblem {
    MultiChannelSystem system;
    FeedbackTuple feedbacks; // full tuple; the entry for `channel` is ignored
    int channel = 0;
    ControlBox control;
    DiffusionSpec diffusion;
    double epsilon = 0.0;

    ChannelProblem(MultiChannelSystem sys, FeedbackTuple fb, int chan, ControlBox ctrl,
                   DiffusionSpec diff, double eps);

    /// A + sum_{j != channel} B_j gamma_j.
    Matrix frozen_drift_matrix() const;
};

/// Constant midpoint policy over the grid.
PolicyField midpoint_policy(const ChannelProblem& prob, const OperatorGrid& grid);

/// Discretizes the channel generator with drift b(x) = frozen part + B_i u(x),
/// upwind directions recomputed per node from the total drift.
SparseOperator assemble_channel_operator(const ChannelProblem& prob, const OperatorGrid& grid,
                                         const PolicyField& policy);

/// Gradient of a grid function at every interior node: central differences
/// where both axis neighbors are interior, one-sided toward the interior at
/// boundary-adjacent nodes.
std::vector<Vector> grid_gradient(const OperatorGrid& grid, const Eigen::VectorXd& values);

/// Pointwise argmax of <B_i^T grad psi, u> over the control box: bang-bang
/// per component, midpoint on ties (|component| <= tie_tol).
PolicyField improve_policy(const std::vector<Vector>& grad_psi, const Matrix& B_channel,
                           const ControlBox& box, int channel, double tie_tol = 1e-12);

struct HjbSolution {
    EigenPair pair;
    PolicyField policy;
    std::vector<double> trace; // lambda after each sweep
    int sweeps = 0;
    bool policy_fixed_point = false;
};

/// Howard-style policy iteration on the controlled eigenvalue problem:
/// alternate principal eigenpair under the fixed policy with pointwise
/// policy improvement; stops when lambda stalls or the policy stops moving.
/// The returned solution is the best (smallest-lambda) sweep.
HjbSolution policy_iteration(const ChannelProblem& prob, const OperatorGrid& grid,
                             double tol = 1e-8, int max_sweeps = 40);

using RateVector = std::vector<double>;

/// Per-channel optimal exit rates for the given tuple: channel i is solved
/// with every other channel's gain frozen from `feedbacks`.
std::vector<HjbSolution> rate_vector_solutions(const MultiChannelSystem& system,
                                               const FeedbackTuple& feedbacks,
                                               const ControlSpec& controls,
                                               const DiffusionSpec& diffusion, double epsilon,
                                               const OperatorGrid& grid);
RateVector rate_vector(const MultiChannelSystem& system, const FeedbackTuple& feedbacks,
                       const ControlSpec& controls, const DiffusionSpec& diffusion, double epsilon,
                       const OperatorGrid& grid);

/// Drift term for simulating under a grid policy: B_i u(nearest node).
Drift policy_drift(const Matrix& frozen_matrix, const Matrix& B_channel, const PolicyField& policy,
                   const OperatorGrid& grid);

} // namespace exitrate
