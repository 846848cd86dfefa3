#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "exitrate/action.hpp"
#include "exitrate/config.hpp"
#include "exitrate/elliptic.hpp"
#include "exitrate/flow.hpp"
#include "exitrate/hjb.hpp"
#include "exitrate/pareto.hpp"
#include "exitrate/sde.hpp"
#include "exitrate/version.hpp"

namespace py = pybind11;
using namespace exitrate;

namespace {

Matrix states_matrix(const std::vector<Vector>& states) {
    if (states.empty()) return Matrix();
    Matrix out(static_cast<Eigen::Index>(states.size()), states.front().size());
    for (std::size_t i = 0; i < states.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = states[i];
    return out;
}

DiscretePath path_from_matrix(double horizon, const Matrix& states) {
    DiscretePath p;
    p.horizon = horizon;
    for (Eigen::Index i = 0; i < states.rows(); ++i) p.states.push_back(states.row(i));
    return p;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exit-rate toolkit for multi-channel linear systems under small noise";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "ToolkitError");

    py::class_<MultiChannelSystem>(m, "MultiChannelSystem")
        .def(py::init<Matrix, std::vector<Matrix>>(), py::arg("A"), py::arg("B"))
        .def_property_readonly("dim", &MultiChannelSystem::dim)
        .def_property_readonly("channels", &MultiChannelSystem::channels)
        .def_property_readonly("A", &MultiChannelSystem::A)
        .def("input_dim", &MultiChannelSystem::input_dim);

    py::class_<FeedbackTuple>(m, "FeedbackTuple")
        .def(py::init<std::vector<Matrix>>(), py::arg("gains"))
        .def_property_readonly("gains", &FeedbackTuple::gains);

    py::class_<Domain>(m, "Domain")
        .def_static("box", &Domain::box, py::arg("lower"), py::arg("upper"))
        .def_static("ball", &Domain::ball, py::arg("center"), py::arg("radius"))
        .def_property_readonly("dim", &Domain::dim)
        .def("contains", &Domain::contains)
        .def("contains_closure", &Domain::contains_closure)
        .def("signed_distance", &Domain::signed_distance)
        .def("project", &Domain::project);

    py::class_<DiffusionSpec>(m, "DiffusionSpec")
        .def(py::init([](Matrix base, const std::string& kind, double beta) {
                 Modulation mod;
                 if (kind == "saturating") {
                     mod.kind = ModulationKind::Saturating;
                     mod.beta = beta;
                 } else if (kind != "constant") {
                     throw PreconditionError("modulation kind must be constant or saturating");
                 }
                 return DiffusionSpec(std::move(base), mod);
             }),
             py::arg("base"), py::arg("modulation") = "constant", py::arg("beta") = 0.0)
        .def_property_readonly("kappa", &DiffusionSpec::kappa)
        .def("sigma", &DiffusionSpec::sigma)
        .def("a", &DiffusionSpec::a);

    py::class_<ControlBox>(m, "ControlBox")
        .def(py::init<Vector, Vector>(), py::arg("lower"), py::arg("upper"))
        .def_property_readonly("midpoint", &ControlBox::midpoint);

    m.def("closed_loop", &closed_loop, py::arg("system"), py::arg("feedbacks"),
          "A + sum_i B_i gamma_i");
    m.def(
        "validate_diffusion",
        [](const DiffusionSpec& spec) { return validate_diffusion(spec); },
        py::arg("diffusion"), "certified uniform ellipticity bound");

    // flow -------------------------------------------------------------
    m.def("matrix_exponential", &matrix_exponential);
    m.def(
        "integrate_flow",
        [](const Matrix& M, const Vector& x0, double T, double dt) {
            const Trajectory t = integrate_flow(M, x0, T, dt);
            return py::make_tuple(t.times, states_matrix(t.states));
        },
        py::arg("M"), py::arg("x0"), py::arg("T"), py::arg("dt"),
        "returns (times, states) of the exact exponential-stepping orbit");
    m.def("equilibrium_in_domain", &equilibrium_in_domain);
    m.def("exit_time_deterministic", &exit_time_deterministic, py::arg("M"), py::arg("x0"),
          py::arg("domain"), py::arg("dt"), py::arg("t_cap"),
          "first boundary crossing of the deterministic flow, None if capped");

    py::class_<InvariantSetEstimate>(m, "InvariantSetEstimate")
        .def_property_readonly("nonempty",
                               [](const InvariantSetEstimate& e) { return e.nonempty; })
        .def_property_readonly("horizon", [](const InvariantSetEstimate& e) { return e.horizon; })
        .def_property_readonly("equilibrium",
                               [](const InvariantSetEstimate& e) { return e.equilibrium; })
        .def_property_readonly("nodes",
                               [](const InvariantSetEstimate& e) { return states_matrix(e.nodes); });
    m.def("estimate_invariant_set", &estimate_invariant_set, py::arg("M"), py::arg("domain"),
          py::arg("resolution"), py::arg("T"), py::arg("dt"));
    m.def("default_invariant_horizon", &default_invariant_horizon);

    // sde ----------------------------------------------------------------
    py::class_<ExitSampleSet>(m, "ExitSampleSet")
        .def_property_readonly("exit_times", &ExitSampleSet::exit_times)
        .def_property_readonly("censored_count", &ExitSampleSet::censored_count)
        .def_property_readonly("epsilon", [](const ExitSampleSet& s) { return s.meta.epsilon; })
        .def_property_readonly("seed", [](const ExitSampleSet& s) { return s.meta.seed; })
        .def_property_readonly("samples", [](const ExitSampleSet& s) { return s.meta.samples; });

    py::class_<RateEstimate>(m, "RateEstimate")
        .def_readonly("rate", &RateEstimate::rate)
        .def_readonly("stderr", &RateEstimate::stderr_)
        .def_readonly("t_lo", &RateEstimate::t_lo)
        .def_readonly("t_hi", &RateEstimate::t_hi)
        .def_readonly("r_squared", &RateEstimate::r_squared);

    m.def(
        "simulate_exit",
        [](const Matrix& M, const DiffusionSpec& d, double eps, const Vector& x0,
           const Domain& D, double dt, double t_max, std::uint64_t seed) {
            return simulate_exit(Drift(M), d, eps, x0, D, dt, t_max, seed);
        },
        py::arg("M"), py::arg("diffusion"), py::arg("epsilon"), py::arg("x0"), py::arg("domain"),
        py::arg("dt"), py::arg("t_max"), py::arg("seed"),
        "single Euler-Maruyama first-exit time, None if censored");
    m.def(
        "sample_exit_times",
        [](const Matrix& M, const DiffusionSpec& d, double eps, const Vector& x0,
           const Domain& D, double dt, double t_max, int n, std::uint64_t seed, int threads) {
            return sample_exit_times(Drift(M), d, eps, x0, D, dt, t_max, n, seed, threads);
        },
        py::arg("M"), py::arg("diffusion"), py::arg("epsilon"), py::arg("x0"), py::arg("domain"),
        py::arg("dt"), py::arg("t_max"), py::arg("n"), py::arg("seed"), py::arg("threads") = 1);
    m.def("survival_curve", &survival_curve, py::arg("samples"), py::arg("t_grid"));
    m.def("estimate_exit_rate", &estimate_exit_rate, py::arg("samples"),
          py::arg("window") = py::none());

    // elliptic ---------------------------------------------------------
    py::class_<OperatorGrid>(m, "OperatorGrid")
        .def_property_readonly("dim", &OperatorGrid::dim)
        .def_property_readonly("interior_count", &OperatorGrid::interior_count)
        .def_property_readonly("spacing",
                               [](const OperatorGrid& g) { return g.spacing(); })
        .def("interior_coords", &OperatorGrid::interior_coords);
    m.def(
        "build_grid",
        [](const Domain& D, const std::vector<int>& resolution) {
            return build_grid(D, resolution);
        },
        py::arg("domain"), py::arg("resolution"));

    py::class_<SparseOperator>(m, "SparseOperator")
        .def_property_readonly("matrix", [](const SparseOperator& op) { return op.L; })
        .def_property_readonly("epsilon", [](const SparseOperator& op) { return op.epsilon; });
    py::class_<EigenPair>(m, "EigenPair")
        .def_readonly("lam", &EigenPair::lambda)
        .def_readonly("psi", &EigenPair::psi)
        .def_readonly("residual", &EigenPair::residual)
        .def_readonly("iterations", &EigenPair::iterations);
    m.def(
        "discretize",
        [](const Matrix& M, const DiffusionSpec& d, double eps, const OperatorGrid& grid) {
            return discretize(M, d, eps, grid);
        },
        py::arg("M"), py::arg("diffusion"), py::arg("epsilon"), py::arg("grid"));
    m.def("principal_eigenpair", &principal_eigenpair, py::arg("op"), py::arg("tol") = 1e-10,
          py::arg("max_iter") = 400);
    m.def("verify_residual", &verify_residual);
    m.def(
        "principal_eigenvalue",
        [](const Matrix& M, const DiffusionSpec& d, double eps, const Domain& D,
           const std::vector<int>& resolution) {
            const OperatorGrid grid = build_grid(D, resolution);
            return principal_eigenpair(discretize(M, d, eps, grid));
        },
        py::arg("M"), py::arg("diffusion"), py::arg("epsilon"), py::arg("domain"),
        py::arg("resolution"), "grid eigensolve in one call");

    // hjb ----------------------------------------------------------------
    py::class_<PolicyField>(m, "PolicyField")
        .def_readonly("channel", &PolicyField::channel)
        .def_property_readonly("values",
                               [](const PolicyField& p) { return states_matrix(p.values); });
    py::class_<HjbSolution>(m, "HjbSolution")
        .def_property_readonly("lam", [](const HjbSolution& s) { return s.pair.lambda; })
        .def_property_readonly("psi", [](const HjbSolution& s) { return s.pair.psi; })
        .def_readonly("policy", &HjbSolution::policy)
        .def_readonly("trace", &HjbSolution::trace)
        .def_readonly("sweeps", &HjbSolution::sweeps)
        .def_readonly("policy_fixed_point", &HjbSolution::policy_fixed_point);
    m.def(
        "policy_iteration",
        [](const MultiChannelSystem& sys, const FeedbackTuple& fb, int channel,
           const ControlBox& box, const DiffusionSpec& d, double eps, const OperatorGrid& grid,
           double tol, int max_sweeps) {
            const ChannelProblem prob(sys, fb, channel, box, d, eps);
            return policy_iteration(prob, grid, tol, max_sweeps);
        },
        py::arg("system"), py::arg("feedbacks"), py::arg("channel"), py::arg("control"),
        py::arg("diffusion"), py::arg("epsilon"), py::arg("grid"), py::arg("tol") = 1e-8,
        py::arg("max_sweeps") = 40);
    m.def(
        "rate_vector",
        [](const MultiChannelSystem& sys, const FeedbackTuple& fb,
           const std::vector<ControlBox>& controls, const DiffusionSpec& d, double eps,
           const OperatorGrid& grid) {
            ControlSpec spec;
            spec.channels = controls;
            return rate_vector(sys, fb, spec, d, eps, grid);
        },
        py::arg("system"), py::arg("feedbacks"), py::arg("controls"), py::arg("diffusion"),
        py::arg("epsilon"), py::arg("grid"));

    // action -------------------------------------------------------------
    py::class_<ActionReport>(m, "ActionReport")
        .def_readonly("value", &ActionReport::value)
        .def_readonly("converged", &ActionReport::converged)
        .def_readonly("iterations", &ActionReport::iterations)
        .def_property_readonly("path",
                               [](const ActionReport& r) { return states_matrix(r.path.states); });
    m.def(
        "action_value",
        [](double horizon, const Matrix& states, const Matrix& M, const DiffusionSpec& d) {
            return action_value(path_from_matrix(horizon, states), M, d);
        },
        py::arg("horizon"), py::arg("states"), py::arg("M"), py::arg("diffusion"),
        "midpoint-quadrature path cost; states has one row per node");
    m.def(
        "action_gradient",
        [](double horizon, const Matrix& states, const Matrix& M, const DiffusionSpec& d) {
            return action_gradient(path_from_matrix(horizon, states), M, d);
        },
        py::arg("horizon"), py::arg("states"), py::arg("M"), py::arg("diffusion"));
    m.def("minimize_action", &minimize_action, py::arg("x0"), py::arg("T"), py::arg("N"),
          py::arg("M"), py::arg("diffusion"), py::arg("domain"));

    py::class_<ConfinementRateTable>(m, "ConfinementRateTable")
        .def_readonly("horizons", &ConfinementRateTable::horizons)
        .def_readonly("values", &ConfinementRateTable::values)
        .def_readonly("value_per_t", &ConfinementRateTable::value_per_t)
        .def_readonly("r_hat", &ConfinementRateTable::r_hat)
        .def_readonly("stabilized", &ConfinementRateTable::stabilized);
    m.def("estimate_r", &estimate_r, py::arg("x0"), py::arg("M"), py::arg("diffusion"),
          py::arg("domain"), py::arg("t_schedule"), py::arg("steps_per_time") = 16,
          py::arg("min_steps") = 16);

    py::class_<ExponentFit>(m, "ExponentFit")
        .def_readonly("r", &ExponentFit::r)
        .def_readonly("slope", &ExponentFit::slope)
        .def_readonly("residuals", &ExponentFit::residuals);
    m.def("extrapolate_rate_exponent", &extrapolate_rate_exponent, py::arg("pairs"),
          "fit of -eps log lambda against eps; pairs are (eps, lambda), eps decreasing");

    py::class_<MarginCheck>(m, "MarginCheck")
        .def_readonly("margin", &MarginCheck::margin)
        .def_readonly("holds", &MarginCheck::holds);
    m.def("corollary_check", &corollary_check, py::arg("r_closed_loop"), py::arg("r_channels"),
          py::arg("tol") = 1e-6);

    py::class_<SelectionTable>(m, "SelectionTable")
        .def_readonly("best_index", &SelectionTable::best_index)
        .def_readonly("values", &SelectionTable::values);
    m.def("minimal_action_selection", &minimal_action_selection, py::arg("system"),
          py::arg("candidates"), py::arg("x0"), py::arg("T"), py::arg("N"), py::arg("diffusion"),
          py::arg("domain"));

    // pareto -------------------------------------------------------------
    m.def("dominates", &dominates, py::arg("a"), py::arg("b"));
    m.def(
        "pareto_front",
        [](const std::vector<RateVector>& rates) {
            const FeedbackTuple dummy({Matrix::Zero(1, 1)});
            std::vector<ParetoRecord> records;
            for (std::size_t i = 0; i < rates.size(); ++i) {
                records.push_back(ParetoRecord{i, dummy, rates[i], false, {}});
            }
            const std::vector<std::size_t> front = pareto_front(records);
            std::vector<bool> dominated;
            for (const auto& r : records) dominated.push_back(r.dominated);
            return py::make_tuple(front, dominated);
        },
        py::arg("rates"), "returns (front indices, dominated flags)");
    m.def(
        "scalarize",
        [](const std::vector<RateVector>& rates, const std::vector<double>& weights) {
            const FeedbackTuple dummy({Matrix::Zero(1, 1)});
            std::vector<ParetoRecord> records;
            for (std::size_t i = 0; i < rates.size(); ++i) {
                records.push_back(ParetoRecord{i, dummy, rates[i], false, {}});
            }
            return scalarize(records, WeightVector(weights));
        },
        py::arg("rates"), py::arg("weights"));
}
