#include "sindy/config.hpp"

#include <algorithm>

#include "sindy/errors.hpp"

namespace sindy {

JsonReader::JsonReader(const Json& obj, std::string prefix, std::vector<std::string>& errors)
    : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
    if (!obj_.is_object()) errors_.push_back((prefix_.empty() ? std::string("<root>") : prefix_) + ": expected an object");
}

std::string JsonReader::path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

bool JsonReader::has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

const Json* JsonReader::raw(const std::string& key) {
    used_.push_back(key);
    if (!has(key)) return nullptr;
    return &obj_.at(key);
}

void JsonReader::type_error(const std::string& key, const Json& value) {
    errors_.push_back(path(key) + ": unexpected value " + value.dump());
}

void JsonReader::finish() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items())
        if (std::find(used_.begin(), used_.end(), key) == used_.end()) errors_.push_back(path(key) + ": unknown key");
}

void throw_if_errors(const std::string& what, const std::vector<std::string>& errors) {
    if (errors.empty()) return;
    std::string msg = what + " (" + std::to_string(errors.size()) + " problem" + (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
}

namespace {

template <class Enum, class Parse>
void get_enum(JsonReader& in, const std::string& key, Enum& out, Parse parse) {
    const Json* v = in.raw(key);
    if (!v) return;
    if (!v->is_string()) {
        in.errors().push_back(in.path(key) + ": expected a string");
        return;
    }
    try {
        out = parse(v->get<std::string>());
    } catch (const std::exception& e) {
        in.errors().push_back(in.path(key) + ": " + e.what());
    }
}

template <class T>
void get_optional(JsonReader& in, const std::string& key, std::optional<T>& out) {
    const Json* v = in.raw(key);
    if (!v || v->is_null()) return;
    try {
        out = v->get<T>();
    } catch (const nlohmann::json::exception&) {
        in.errors().push_back(in.path(key) + ": unexpected value " + v->dump());
    }
}

std::vector<double> to_vector(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

}  // namespace

Json to_json(const SimulationSpec& spec) {
    Json j;
    j["initial_state"] = to_vector(spec.initial_state);
    j["sample_rate"] = spec.sample_rate;
    j["duration"] = spec.duration;
    j["record_start"] = spec.record_start;
    j["abs_tol"] = spec.abs_tol;
    j["rel_tol"] = spec.rel_tol;
    j["integrator"] = to_string(spec.integrator);
    return j;
}

SimulationSpec simulation_from_json(const Json& j, const std::string& prefix, std::vector<std::string>& errors,
                                    SimulationSpec base) {
    JsonReader in(j, prefix, errors);
    std::vector<double> x0(base.initial_state.data(), base.initial_state.data() + base.initial_state.size());
    in.get("initial_state", x0);
    base.initial_state = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    in.get("sample_rate", base.sample_rate);
    in.get("duration", base.duration);
    in.get("record_start", base.record_start);
    in.get("abs_tol", base.abs_tol);
    in.get("rel_tol", base.rel_tol);
    get_enum(in, "integrator", base.integrator, integrator_from_string);
    in.finish();
    return base;
}

Json to_json(const RegressorConfig& cfg) {
    Json j;
    j["kind"] = to_string(cfg.kind);
    j["grid"] = cfg.grid;
    j["gamma"] = cfg.gamma;
    switch (cfg.kind) {
        case RegressorKind::stlsq: break;
        case RegressorKind::esindy:
            j["n_bags"] = cfg.n_bags;
            j["esindy_lambda"] = optional_json(cfg.esindy_lambda);
            break;
        case RegressorKind::stcv_stlsq:
            j["stage2_grid"] = cfg.stage2_grid;
            j["cascade_ridge"] = optional_json(cfg.cascade_ridge);
            [[fallthrough]];
        case RegressorKind::stcv:
            j["n_steps"] = cfg.n_steps;
            j["stcv_lambda"] = optional_json(cfg.stcv_lambda);
            j["cp_scaling"] = to_string(cfg.cp_scaling);
            break;
    }
    return j;
}

RegressorConfig regressor_from_json(const Json& j, const std::string& prefix, std::vector<std::string>& errors) {
    RegressorConfig cfg;
    if (j.is_string()) {
        try {
            cfg.kind = regressor_from_string(j.get<std::string>());
        } catch (const std::exception& e) {
            errors.push_back(prefix + ": " + e.what());
        }
        return cfg;
    }
    JsonReader in(j, prefix, errors);
    if (!in.has("kind")) errors.push_back(prefix + ": missing 'kind'");
    get_enum(in, "kind", cfg.kind, regressor_from_string);
    in.get("grid", cfg.grid);
    in.get("gamma", cfg.gamma);
    in.get("n_bags", cfg.n_bags);
    get_optional(in, "esindy_lambda", cfg.esindy_lambda);
    in.get("stage2_grid", cfg.stage2_grid);
    get_optional(in, "cascade_ridge", cfg.cascade_ridge);
    in.get("n_steps", cfg.n_steps);
    get_optional(in, "stcv_lambda", cfg.stcv_lambda);
    get_enum(in, "cp_scaling", cfg.cp_scaling, cp_scaling_from_string);
    in.finish();
    return cfg;
}

Json to_json(const ExperimentSpec& spec) {
    Json j;
    j["system"] = spec.system;
    j["system_params"] = spec.system_params;
    j["simulation"] = to_json(spec.resolved_simulation());
    j["noise_levels"] = spec.noise_levels;
    j["noise_family"] = to_string(spec.noise_family);
    j["realisations"] = spec.realisations;
    Json sc = Json::array();
    for (Scaling s : spec.scalings) sc.push_back(to_string(s));
    j["scalings"] = sc;
    Json regs = Json::array();
    for (const auto& r : spec.regressors) regs.push_back(to_json(r));
    j["regressors"] = regs;
    j["library_degree"] = spec.library_degree;
    j["include_constant"] = spec.include_constant;
    j["seed"] = spec.seed;
    return j;
}

namespace {

void read_simulation(JsonReader& in, const std::string& system, std::optional<SimulationSpec>& out) {
    const Json* sim = in.raw("simulation");
    if (!sim || sim->is_null()) return;
    SimulationSpec base;
    try {
        base = out ? *out : default_simulation(system);
    } catch (const std::exception&) {
        // custom systems start from the generic defaults
    }
    out = simulation_from_json(*sim, in.path("simulation"), in.errors(), base);
}

void read_scalings(JsonReader& in, std::vector<Scaling>& out) {
    const Json* v = in.raw("scalings");
    if (!v) return;
    if (v->is_string()) {
        const std::string s = v->get<std::string>();
        if (s == "both") {
            out = {Scaling::raw, Scaling::normalised};
            return;
        }
        try {
            out = {scaling_from_string(s)};
        } catch (const std::exception& e) {
            in.errors().push_back(in.path("scalings") + ": " + e.what());
        }
        return;
    }
    if (!v->is_array()) {
        in.errors().push_back(in.path("scalings") + ": expected a list or \"both\"");
        return;
    }
    out.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
        try {
            out.push_back(scaling_from_string(v->at(i).get<std::string>()));
        } catch (const std::exception& e) {
            in.errors().push_back(in.path("scalings") + "[" + std::to_string(i) + "]: " + e.what());
        }
    }
}

}  // namespace

void experiment_from_json(JsonReader& in, ExperimentSpec& spec) {
    in.get("system", spec.system);
    in.get("system_params", spec.system_params);
    read_simulation(in, spec.system, spec.simulation);
    in.get("noise_levels", spec.noise_levels);
    get_enum(in, "noise_family", spec.noise_family, noise_family_from_string);
    in.get("realisations", spec.realisations);
    read_scalings(in, spec.scalings);
    if (const Json* regs = in.raw("regressors")) {
        if (!regs->is_array()) {
            in.errors().push_back(in.path("regressors") + ": expected a list");
        } else {
            spec.regressors.clear();
            for (std::size_t i = 0; i < regs->size(); ++i)
                spec.regressors.push_back(
                    regressor_from_json(regs->at(i), in.path("regressors") + "[" + std::to_string(i) + "]", in.errors()));
        }
    }
    in.get("library_degree", spec.library_degree);
    in.get("include_constant", spec.include_constant);
    in.get("seed", spec.seed);
}

Json to_json(const SamplingGridSpec& spec) {
    Json j;
    j["system"] = spec.system;
    j["system_params"] = spec.system_params;
    j["simulation"] = to_json(spec.simulation ? *spec.simulation : default_simulation(spec.system));
    j["rates"] = spec.rates;
    j["durations"] = spec.durations;
    j["noise_pct"] = spec.noise_pct;
    j["noise_family"] = to_string(spec.noise_family);
    j["scaling"] = to_string(spec.scaling);
    j["regressor"] = to_json(spec.regressor);
    j["realisations"] = spec.realisations;
    j["library_degree"] = spec.library_degree;
    j["include_constant"] = spec.include_constant;
    j["seed"] = spec.seed;
    return j;
}

void sampling_grid_from_json(JsonReader& in, SamplingGridSpec& spec) {
    in.get("system", spec.system);
    in.get("system_params", spec.system_params);
    read_simulation(in, spec.system, spec.simulation);
    in.get("rates", spec.rates);
    in.get("durations", spec.durations);
    in.get("noise_pct", spec.noise_pct);
    get_enum(in, "noise_family", spec.noise_family, noise_family_from_string);
    get_enum(in, "scaling", spec.scaling, scaling_from_string);
    if (const Json* r = in.raw("regressor")) spec.regressor = regressor_from_json(*r, in.path("regressor"), in.errors());
    in.get("realisations", spec.realisations);
    in.get("library_degree", spec.library_degree);
    in.get("include_constant", spec.include_constant);
    in.get("seed", spec.seed);
}

Json to_json(const BiasTestSpec& spec) {
    Json j;
    j["n_points"] = spec.n_points;
    j["k1_max"] = spec.k1_max;
    j["k2_max"] = spec.k2_max;
    j["noise_pct"] = spec.noise_pct;
    j["noise_family"] = to_string(spec.noise_family);
    j["realisations"] = spec.realisations;
    j["cp_threshold"] = spec.cp_threshold;
    j["gamma"] = spec.gamma;
    j["n_steps"] = spec.n_steps;
    j["stcv_lambda"] = spec.stcv_lambda;
    j["cp_scaling"] = to_string(spec.cp_scaling);
    j["simulation"] = to_json(spec.simulation ? *spec.simulation : default_simulation("oscillator"));
    j["library_degree"] = spec.library_degree;
    j["seed"] = spec.seed;
    return j;
}

void bias_from_json(JsonReader& in, BiasTestSpec& spec) {
    in.get("n_points", spec.n_points);
    in.get("k1_max", spec.k1_max);
    in.get("k2_max", spec.k2_max);
    in.get("noise_pct", spec.noise_pct);
    get_enum(in, "noise_family", spec.noise_family, noise_family_from_string);
    in.get("realisations", spec.realisations);
    in.get("cp_threshold", spec.cp_threshold);
    in.get("gamma", spec.gamma);
    in.get("n_steps", spec.n_steps);
    in.get("stcv_lambda", spec.stcv_lambda);
    get_enum(in, "cp_scaling", spec.cp_scaling, cp_scaling_from_string);
    read_simulation(in, "oscillator", spec.simulation);
    in.get("library_degree", spec.library_degree);
    in.get("seed", spec.seed);
}

}  // namespace sindy
