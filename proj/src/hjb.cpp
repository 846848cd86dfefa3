#include "exitrate/hjb.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace exitrate {

bool PolicyField::same_values(const PolicyField& other, double tol) const {
    if (channel != other.channel || values.size() != other.values.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != other.values[i].size()) return false;
        if ((values[i] - other.values[i]).lpNorm<Eigen::Infinity>() > tol) return false;
    }
    return true;
}

ChannelProblem::ChannelProblem(MultiChannelSystem sys, FeedbackTuple fb, int chan, ControlBox ctrl,
                               DiffusionSpec diff, double eps)
    : system(std::move(sys)),
      feedbacks(std::move(fb)),
      channel(chan),
      control(std::move(ctrl)),
      diffusion(std::move(diff)),
      epsilon(eps) {
    feedbacks.validate_against(system);
    if (channel < 0 || channel >= system.channels()) {
        throw DimensionError("channel index " + std::to_string(channel + 1) + " out of range");
    }
    if (control.dim() != system.input_dim(channel)) {
        throw DimensionError("control box dimension does not match channel " +
                             std::to_string(channel + 1));
    }
    if (!(epsilon > 0.0)) {
        throw PreconditionError("channel problem requires epsilon > 0");
    }
}

Matrix ChannelProblem::frozen_drift_matrix() const {
    Matrix M = system.A();
    for (int j = 0; j < system.channels(); ++j) {
        if (j == channel) continue;
        M += system.B(j) * feedbacks.gain(j);
    }
    return M;
}

PolicyField midpoint_policy(const ChannelProblem& prob, const OperatorGrid& grid) {
    PolicyField policy;
    policy.channel = prob.channel;
    policy.values.assign(static_cast<std::size_t>(grid.interior_count()),
                         prob.control.midpoint());
    return policy;
}

SparseOperator assemble_channel_operator(const ChannelProblem& prob, const OperatorGrid& grid,
                                         const PolicyField& policy) {
    if (static_cast<std::int64_t>(policy.values.size()) != grid.interior_count()) {
        throw DimensionError("policy does not cover every interior node");
    }
    const Matrix M = prob.frozen_drift_matrix();
    const Matrix& B = prob.system.B(prob.channel);
    for (const Vector& u : policy.values) {
        if (!prob.control.contains(u, 1e-12)) {
            throw PreconditionError("policy value outside the admissible control box");
        }
    }
    // Policy values are indexed by interior ordinal; recover the ordinal from
    // the node coordinates (exact since drift is evaluated at grid nodes).
    const DriftFn drift = [&M, &B, &policy, &grid](const Vector& x) {
        const std::int64_t ord = grid.interior_ordinal(grid.nearest_node(x));
        Vector b = M * x;
        if (ord >= 0) b += B * policy.values[static_cast<std::size_t>(ord)];
        return b;
    };
    return discretize_field(drift, prob.diffusion, prob.epsilon, grid);
}

std::vector<Vector> grid_gradient(const OperatorGrid& grid, const Eigen::VectorXd& values) {
    if (static_cast<std::int64_t>(values.size()) != grid.interior_count()) {
        throw DimensionError("grid function does not match the interior node count");
    }
    const int d = grid.dim();
    const std::int64_t m = grid.interior_count();
    std::vector<Vector> grad(static_cast<std::size_t>(m), Vector::Zero(d));

    const auto value_at = [&](std::int64_t flat) -> std::optional<double> {
        if (flat < 0) return std::nullopt;
        const std::int64_t ord = grid.interior_ordinal(flat);
        if (ord < 0) return std::nullopt;
        return values[ord];
    };

    for (std::int64_t k = 0; k < m; ++k) {
        const std::int64_t flat = grid.interior_flat(k);
        for (int ax = 0; ax < d; ++ax) {
            const double h = grid.spacing(ax);
            const auto up = value_at(grid.neighbor(flat, ax, +1));
            const auto dn = value_at(grid.neighbor(flat, ax, -1));
            double g = 0.0;
            if (up && dn) {
                g = (*up - *dn) / (2.0 * h);
            } else if (up) {
                g = (*up - values[k]) / h;
            } else if (dn) {
                g = (values[k] - *dn) / h;
            }
            grad[static_cast<std::size_t>(k)][ax] = g;
        }
    }
    return grad;
}

PolicyField improve_policy(const std::vector<Vector>& grad_psi, const Matrix& B_channel,
                           const ControlBox& box, int channel, double tie_tol) {
    PolicyField policy;
    policy.channel = channel;
    policy.values.reserve(grad_psi.size());
    for (const Vector& g : grad_psi) {
        const Vector s = B_channel.transpose() * g;
        Vector u(box.dim());
        for (Eigen::Index c = 0; c < s.size(); ++c) {
            if (s[c] > tie_tol) {
                u[c] = box.upper[c];
            } else if (s[c] < -tie_tol) {
                u[c] = box.lower[c];
            } else {
                u[c] = 0.5 * (box.lower[c] + box.upper[c]);
            }
        }
        policy.values.push_back(std::move(u));
    }
    return policy;
}

HjbSolution policy_iteration(const ChannelProblem& prob, const OperatorGrid& grid, double tol,
                             int max_sweeps) {
    PolicyField policy = midpoint_policy(prob, grid);

    HjbSolution best;
    best.pair.lambda = std::numeric_limits<double>::infinity();
    std::vector<double> trace;

    double lambda_prev = std::numeric_limits<double>::quiet_NaN();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        const SparseOperator op = assemble_channel_operator(prob, grid, policy);
        const EigenPair pair = principal_eigenpair(op);
        trace.push_back(pair.lambda);

        if (std::isfinite(lambda_prev) &&
            pair.lambda > lambda_prev + 10.0 * tol * std::max(1.0, std::abs(lambda_prev))) {
            throw SolverError("policy iteration increased lambda from " +
                              std::to_string(lambda_prev) + " to " + std::to_string(pair.lambda) +
                              "; improvement convention violated");
        }

        if (pair.lambda < best.pair.lambda) {
            best.pair = pair;
            best.policy = policy;
        }
        best.sweeps = sweep;

        const bool stalled = std::isfinite(lambda_prev) &&
                             std::abs(lambda_prev - pair.lambda) <=
                                 tol * std::max(std::abs(pair.lambda), 1e-300);
        lambda_prev = pair.lambda;

        const std::vector<Vector> grad = grid_gradient(grid, pair.psi);
        PolicyField improved = improve_policy(grad, prob.system.B(prob.channel), prob.control,
                                              prob.channel);
        const bool fixed_point = improved.same_values(policy);
        if (fixed_point || stalled) {
            best.policy_fixed_point = fixed_point;
            break;
        }
        policy = std::move(improved);
    }
    best.trace = std::move(trace);
    return best;
}

std::vector<HjbSolution> rate_vector_solutions(const MultiChannelSystem& system,
                                               const FeedbackTuple& feedbacks,
                                               const ControlSpec& controls,
                                               const DiffusionSpec& diffusion, double epsilon,
                                               const OperatorGrid& grid) {
    feedbacks.validate_against(system);
    if (controls.n() != system.channels()) {
        throw DimensionError("control spec has " + std::to_string(controls.n()) +
                             " channels, system has " + std::to_string(system.channels()));
    }
    std::vector<HjbSolution> out;
    out.reserve(static_cast<std::size_t>(system.channels()));
    for (int i = 0; i < system.channels(); ++i) {
        try {
            ChannelProblem prob(system, feedbacks, i, controls.channel(i), diffusion, epsilon);
            out.push_back(policy_iteration(prob, grid));
        } catch (const Error& e) {
            throw Error(e.kind(), "channel " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

RateVector rate_vector(const MultiChannelSystem& system, const FeedbackTuple& feedbacks,
                       const ControlSpec& controls, const DiffusionSpec& diffusion, double epsilon,
                       const OperatorGrid& grid) {
    RateVector rates;
    for (const HjbSolution& s : rate_vector_solutions(system, feedbacks, controls, diffusion,
                                                      epsilon, grid)) {
        rates.push_back(s.pair.lambda);
    }
    return rates;
}

Drift policy_drift(const Matrix& frozen_matrix, const Matrix& B_channel, const PolicyField& policy,
                   const OperatorGrid& grid) {
    // Copy shared state into the closure so the drift outlives its inputs.
    auto values = std::make_shared<std::vector<Vector>>(policy.values);
    auto grid_copy = std::make_shared<OperatorGrid>(grid);
    Matrix B = B_channel;
    return Drift(frozen_matrix, [values, grid_copy, B](const Vector& x) {
        const std::int64_t ord = grid_copy->nearest_interior(x);
        if (ord < 0) return Vector(Vector::Zero(x.size()));
        return Vector(B * (*values)[static_cast<std::size_t>(ord)]);
    });
}

} // namespace exitrate
