#include "exitrate/config.hpp"

#include <cmath>
#include <set>

#include "exitrate/io.hpp"
#include "nlohmann/json.hpp"

namespace exitrate {

namespace {

using nlohmann::json;

struct Collector {
    std::vector<std::string> errors;

    void add(const std::string& path, const std::string& what) {
        errors.push_back(path + ": " + what);
    }
};

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed,
                Collector& errs) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) {
            errs.add(path + "." + key, "unknown key");
        }
    }
}

std::optional<double> get_number(const json& j, const std::string& path, Collector& errs) {
    if (!j.is_number()) {
        errs.add(path, "expected a number");
        return std::nullopt;
    }
    return j.get<double>();
}

std::optional<int> get_int(const json& j, const std::string& path, Collector& errs) {
    if (!j.is_number_integer()) {
        errs.add(path, "expected an integer");
        return std::nullopt;
    }
    return j.get<int>();
}

std::optional<Vector> get_vector(const json& j, const std::string& path, Collector& errs) {
    if (!j.is_array() || j.empty()) {
        errs.add(path, "expected a nonempty array of numbers");
        return std::nullopt;
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            errs.add(path + "[" + std::to_string(i) + "]", "expected a number");
            return std::nullopt;
        }
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

std::optional<Matrix> get_matrix(const json& j, const std::string& path, Collector& errs) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        errs.add(path, "expected a nested array (row-major matrix)");
        return std::nullopt;
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            errs.add(path + "[" + std::to_string(r) + "]", "ragged matrix row");
            return std::nullopt;
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) {
                errs.add(path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                         "expected a number");
                return std::nullopt;
            }
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

std::optional<MultiChannelSystem> parse_system(const json& j, Collector& errs) {
    if (!j.is_object()) {
        errs.add("system", "expected an object with keys A and B");
        return std::nullopt;
    }
    check_keys(j, "system", {"A", "B"}, errs);
    if (!j.contains("A") || !j.contains("B")) {
        errs.add("system", "requires both A and B");
        return std::nullopt;
    }
    auto A = get_matrix(j["A"], "system.A", errs);
    if (!j["B"].is_array() || j["B"].empty()) {
        errs.add("system.B", "expected a nonempty list of matrices");
        return std::nullopt;
    }
    std::vector<Matrix> B;
    for (std::size_t i = 0; i < j["B"].size(); ++i) {
        auto Bi = get_matrix(j["B"][i], "system.B[" + std::to_string(i) + "]", errs);
        if (!Bi) return std::nullopt;
        B.push_back(std::move(*Bi));
    }
    if (!A) return std::nullopt;
    try {
        return MultiChannelSystem(std::move(*A), std::move(B));
    } catch (const Error& e) {
        errs.add("system", e.what());
        return std::nullopt;
    }
}

std::optional<Domain> parse_domain(const json& j, Collector& errs) {
    if (!j.is_object() || j.size() != 1) {
        errs.add("domain", "expected exactly one of {\"box\": ...} or {\"ball\": ...}");
        return std::nullopt;
    }
    try {
        if (j.contains("box")) {
            const json& b = j["box"];
            check_keys(b, "domain.box", {"lower", "upper"}, errs);
            auto lo = get_vector(b.value("lower", json()), "domain.box.lower", errs);
            auto hi = get_vector(b.value("upper", json()), "domain.box.upper", errs);
            if (!lo || !hi) return std::nullopt;
            return Domain::box(std::move(*lo), std::move(*hi));
        }
        if (j.contains("ball")) {
            const json& b = j["ball"];
            check_keys(b, "domain.ball", {"center", "radius"}, errs);
            auto c = get_vector(b.value("center", json()), "domain.ball.center", errs);
            auto r = get_number(b.value("radius", json()), "domain.ball.radius", errs);
            if (!c || !r) return std::nullopt;
            return Domain::ball(std::move(*c), *r);
        }
    } catch (const Error& e) {
        errs.add("domain", e.what());
        return std::nullopt;
    }
    errs.add("domain", "shape must be box or ball");
    return std::nullopt;
}

std::optional<DiffusionSpec> parse_diffusion(const json& j, Collector& errs) {
    if (!j.is_object()) {
        errs.add("diffusion", "expected an object");
        return std::nullopt;
    }
    check_keys(j, "diffusion", {"base", "modulation"}, errs);
    if (!j.contains("base")) {
        errs.add("diffusion.base", "required");
        return std::nullopt;
    }
    auto base = get_matrix(j["base"], "diffusion.base", errs);
    Modulation mod;
    if (j.contains("modulation")) {
        const json& m = j["modulation"];
        check_keys(m, "diffusion.modulation", {"kind", "beta"}, errs);
        const std::string kind = m.value("kind", "");
        if (kind == "constant") {
            mod.kind = ModulationKind::Constant;
        } else if (kind == "saturating") {
            mod.kind = ModulationKind::Saturating;
            if (!m.contains("beta")) {
                errs.add("diffusion.modulation.beta", "required for the saturating family");
                return std::nullopt;
            }
            auto beta = get_number(m["beta"], "diffusion.modulation.beta", errs);
            if (!beta) return std::nullopt;
            mod.beta = *beta;
        } else {
            errs.add("diffusion.modulation.kind", "must be \"constant\" or \"saturating\"");
            return std::nullopt;
        }
    }
    if (!base) return std::nullopt;
    try {
        return DiffusionSpec(std::move(*base), mod);
    } catch (const Error& e) {
        errs.add("diffusion", e.what());
        return std::nullopt;
    }
}

std::optional<ControlSpec> parse_controls(const json& j, Collector& errs) {
    if (!j.is_array() || j.empty()) {
        errs.add("controls", "expected a nonempty list of boxes");
        return std::nullopt;
    }
    ControlSpec spec;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "controls[" + std::to_string(i) + "]";
        if (!j[i].is_object()) {
            errs.add(path, "expected {\"lower\": [...], \"upper\": [...]}");
            return std::nullopt;
        }
        check_keys(j[i], path, {"lower", "upper"}, errs);
        auto lo = get_vector(j[i].value("lower", json()), path + ".lower", errs);
        auto hi = get_vector(j[i].value("upper", json()), path + ".upper", errs);
        if (!lo || !hi) return std::nullopt;
        try {
            spec.channels.emplace_back(std::move(*lo), std::move(*hi));
        } catch (const Error& e) {
            errs.add(path, e.what());
            return std::nullopt;
        }
    }
    return spec;
}

std::vector<double> parse_epsilons(const json& j, Collector& errs) {
    std::vector<double> eps;
    if (j.is_number()) {
        eps.push_back(j.get<double>());
    } else if (j.is_array() && !j.empty()) {
        for (const auto& e : j) {
            if (!e.is_number()) {
                errs.add("epsilon", "entries must be numbers");
                return {};
            }
            eps.push_back(e.get<double>());
        }
    } else {
        errs.add("epsilon", "expected a number or a nonempty list of numbers");
        return {};
    }
    for (double e : eps) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            errs.add("epsilon", "values must be positive and finite, got " + format_double(e));
            return {};
        }
    }
    return eps;
}

void parse_run(const json& j, int dim, RunParams& run, Collector& errs) {
    if (!j.is_object()) {
        errs.add("run", "expected an object");
        return;
    }
    check_keys(j, "run",
               {"x0", "grid_resolution", "t_schedule", "action_steps", "weights", "candidate",
                "sim", "invariant", "out_dir", "dump_psi"},
               errs);
    if (j.contains("x0")) {
        if (auto v = get_vector(j["x0"], "run.x0", errs)) run.x0 = std::move(*v);
    }
    if (j.contains("grid_resolution")) {
        const json& g = j["grid_resolution"];
        if (g.is_number_integer()) {
            run.grid_resolution.assign(static_cast<std::size_t>(dim), g.get<int>());
        } else if (g.is_array()) {
            run.grid_resolution.clear();
            for (const auto& e : g) {
                if (!e.is_number_integer()) {
                    errs.add("run.grid_resolution", "entries must be integers");
                    return;
                }
                run.grid_resolution.push_back(e.get<int>());
            }
        } else {
            errs.add("run.grid_resolution", "expected an integer or a list of integers");
        }
    }
    if (j.contains("t_schedule")) {
        run.t_schedule.clear();
        if (!j["t_schedule"].is_array()) {
            errs.add("run.t_schedule", "expected a list of horizons");
        } else {
            for (const auto& e : j["t_schedule"]) {
                if (auto v = get_number(e, "run.t_schedule", errs)) run.t_schedule.push_back(*v);
            }
        }
    }
    if (j.contains("action_steps")) {
        if (auto v = get_int(j["action_steps"], "run.action_steps", errs)) {
            if (*v < 16) {
                errs.add("run.action_steps", "must be at least 16");
            } else {
                run.action_steps = *v;
            }
        }
    }
    if (j.contains("weights")) {
        run.weights.clear();
        if (!j["weights"].is_array()) {
            errs.add("run.weights", "expected a list of weight vectors");
        } else {
            for (std::size_t i = 0; i < j["weights"].size(); ++i) {
                auto w = get_vector(j["weights"][i], "run.weights[" + std::to_string(i) + "]", errs);
                if (w) {
                    run.weights.emplace_back(w->data(), w->data() + w->size());
                }
            }
        }
    }
    if (j.contains("candidate")) {
        if (auto v = get_int(j["candidate"], "run.candidate", errs)) run.candidate = *v;
    }
    if (j.contains("out_dir")) {
        if (j["out_dir"].is_string()) {
            run.out_dir = j["out_dir"].get<std::string>();
        } else {
            errs.add("run.out_dir", "expected a string");
        }
    }
    if (j.contains("dump_psi")) {
        if (j["dump_psi"].is_boolean()) {
            run.dump_psi = j["dump_psi"].get<bool>();
        } else {
            errs.add("run.dump_psi", "expected a boolean");
        }
    }
    if (j.contains("sim")) {
        const json& s = j["sim"];
        check_keys(s, "run.sim", {"samples", "dt", "t_max", "seed", "threads", "window"}, errs);
        if (s.contains("samples")) {
            if (auto v = get_int(s["samples"], "run.sim.samples", errs)) {
                if (*v < 1) {
                    errs.add("run.sim.samples", "must be at least 1");
                } else {
                    run.sim.samples = *v;
                }
            }
        }
        if (s.contains("dt")) {
            if (auto v = get_number(s["dt"], "run.sim.dt", errs)) {
                if (!(*v > 0.0)) {
                    errs.add("run.sim.dt", "must be positive");
                } else {
                    run.sim.dt = *v;
                }
            }
        }
        if (s.contains("t_max")) {
            if (auto v = get_number(s["t_max"], "run.sim.t_max", errs)) {
                if (!(*v > 0.0)) {
                    errs.add("run.sim.t_max", "must be positive");
                } else {
                    run.sim.t_max = *v;
                }
            }
        }
        if (s.contains("seed")) {
            if (!s["seed"].is_number_unsigned()) {
                errs.add("run.sim.seed", "expected a nonnegative integer");
            } else {
                run.sim.seed = s["seed"].get<std::uint64_t>();
            }
        }
        if (s.contains("threads")) {
            if (auto v = get_int(s["threads"], "run.sim.threads", errs)) {
                run.sim.threads = std::max(1, *v);
            }
        }
        if (s.contains("window")) {
            if (!s["window"].is_array() || s["window"].size() != 2 ||
                !s["window"][0].is_number() || !s["window"][1].is_number()) {
                errs.add("run.sim.window", "expected [t_lo, t_hi]");
            } else {
                run.sim.window = {s["window"][0].get<double>(), s["window"][1].get<double>()};
            }
        }
    }
    if (j.contains("invariant")) {
        const json& s = j["invariant"];
        check_keys(s, "run.invariant", {"resolution", "dt", "horizon"}, errs);
        if (s.contains("resolution")) {
            if (auto v = get_int(s["resolution"], "run.invariant.resolution", errs)) {
                if (*v < 2) {
                    errs.add("run.invariant.resolution", "must be at least 2 per axis");
                } else {
                    run.invariant.resolution = *v;
                }
            }
        }
        if (s.contains("dt")) {
            if (auto v = get_number(s["dt"], "run.invariant.dt", errs)) run.invariant.dt = *v;
        }
        if (s.contains("horizon")) {
            if (auto v = get_number(s["horizon"], "run.invariant.horizon", errs)) {
                run.invariant.horizon = *v;
            }
        }
    }
}

int default_resolution(int dim) {
    switch (dim) {
        case 1: return 401;
        case 2: return 101;
        default: return 25;
    }
}

} // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("syntax error: ") + e.what()});
    }
    Collector errs;
    if (!j.is_object()) {
        throw ConfigError({"top level must be a JSON object"});
    }
    check_keys(j, "config",
               {"system", "feedback_candidates", "domain", "diffusion", "controls", "epsilon",
                "run"},
               errs);

    for (const char* key : {"system", "feedback_candidates", "domain", "diffusion", "controls",
                            "epsilon"}) {
        if (!j.contains(key)) errs.add(key, "required key missing");
    }

    std::optional<MultiChannelSystem> system;
    std::optional<Domain> domain;
    std::optional<DiffusionSpec> diffusion;
    std::optional<ControlSpec> controls;
    std::vector<double> epsilons;
    std::vector<FeedbackTuple> candidates;

    if (j.contains("system")) system = parse_system(j["system"], errs);
    if (j.contains("domain")) domain = parse_domain(j["domain"], errs);
    if (j.contains("diffusion")) diffusion = parse_diffusion(j["diffusion"], errs);
    if (j.contains("controls")) controls = parse_controls(j["controls"], errs);
    if (j.contains("epsilon")) epsilons = parse_epsilons(j["epsilon"], errs);

    if (j.contains("feedback_candidates")) {
        const json& fc = j["feedback_candidates"];
        if (!fc.is_array() || fc.empty()) {
            errs.add("feedback_candidates", "expected a nonempty list of gain tuples");
        } else {
            for (std::size_t c = 0; c < fc.size(); ++c) {
                const std::string path = "feedback_candidates[" + std::to_string(c) + "]";
                if (!fc[c].is_array()) {
                    errs.add(path, "expected a list of gain matrices");
                    continue;
                }
                std::vector<Matrix> gains;
                bool ok = true;
                for (std::size_t i = 0; i < fc[c].size(); ++i) {
                    auto g = get_matrix(fc[c][i], path + "[" + std::to_string(i) + "]", errs);
                    if (!g) {
                        ok = false;
                        break;
                    }
                    gains.push_back(std::move(*g));
                }
                if (!ok) continue;
                FeedbackTuple tuple(std::move(gains));
                if (system) {
                    try {
                        tuple.validate_against(*system);
                    } catch (const Error& e) {
                        errs.add(path, e.what());
                        continue;
                    }
                }
                candidates.push_back(std::move(tuple));
            }
        }
    }

    RunParams run;
    const int dim = system ? system->dim() : 1;
    run.x0 = Vector::Zero(dim);
    run.grid_resolution.assign(static_cast<std::size_t>(dim), default_resolution(dim));
    if (j.contains("run")) parse_run(j["run"], dim, run, errs);

    // Cross-block consistency once the pieces exist.
    if (system && domain && domain->dim() != system->dim()) {
        errs.add("domain", "dimension " + std::to_string(domain->dim()) +
                               " does not match system dimension " + std::to_string(system->dim()));
    }
    if (system && diffusion && diffusion->dim() != system->dim()) {
        errs.add("diffusion.base", "dimension does not match the system");
    }
    if (system && controls) {
        if (controls->n() != system->channels()) {
            errs.add("controls", "expected one box per channel (" +
                                     std::to_string(system->channels()) + ")");
        } else {
            for (int i = 0; i < controls->n(); ++i) {
                if (controls->channel(i).dim() != system->input_dim(i)) {
                    errs.add("controls[" + std::to_string(i) + "]",
                             "box dimension does not match channel input dimension");
                }
            }
        }
    }
    if (system && static_cast<Eigen::Index>(run.x0.size()) != system->dim()) {
        errs.add("run.x0", "dimension does not match the system");
    }
    if (system && static_cast<int>(run.grid_resolution.size()) != system->dim()) {
        errs.add("run.grid_resolution", "expected one entry per state dimension");
    }
    if (domain && run.x0.size() == domain->dim() && !domain->contains_closure(run.x0)) {
        errs.add("run.x0", "must lie in the closure of the domain");
    }
    if (!candidates.empty() && (run.candidate < 0 ||
                                run.candidate >= static_cast<int>(candidates.size()))) {
        errs.add("run.candidate", "index out of range");
    }
    for (std::size_t i = 0; i < run.weights.size(); ++i) {
        if (system && static_cast<int>(run.weights[i].size()) != system->channels()) {
            errs.add("run.weights[" + std::to_string(i) + "]", "expected one weight per channel");
        }
        for (double w : run.weights[i]) {
            if (!(w > 0.0)) {
                errs.add("run.weights[" + std::to_string(i) + "]", "weights must be positive");
                break;
            }
        }
    }

    if (!errs.errors.empty()) {
        throw ConfigError(std::move(errs.errors));
    }
    return RunConfig{std::move(*system), std::move(candidates), std::move(*domain),
                     std::move(*diffusion), std::move(*controls), std::move(epsilons),
                     std::move(run)};
}

RunConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

} // namespace exitrate
