// sindy: simulate benchmark systems, fit sparse models and run success-rate experiments.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sindy/bench.hpp"
#include "sindy/config.hpp"
#include "sindy/errors.hpp"
#include "sindy/io.hpp"
#include "sindy/svg.hpp"
#include "sindy/version.hpp"

namespace fs = std::filesystem;
using namespace sindy;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Globals {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir;
    bool plot = false;
    bool timing = false;
    std::string config;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
    const char* env = std::getenv("SINDY_OUT_DIR");
    return env && *env ? env : "sindy-out";
}

fs::path prepare_out_dir(const Globals& g) {
    const fs::path dir = g.out_dir.empty() ? default_out_dir() : g.out_dir;
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

template <class Writer>
void write_file(const fs::path& path, Writer&& w) {
    std::ostringstream os;
    w(os);
    write_text(path, os.str());
}

/// Loaded config file: global keys applied to g, payload left for the command reader.
struct ConfigFile {
    Json payload = Json::object();
    bool present = false;
};

ConfigFile load_config(Globals& g, const std::string& command, const CLI::App& app) {
    ConfigFile cf;
    if (g.config.empty()) return cf;
    std::ifstream is(g.config);
    if (!is) throw UsageError("cannot open config file " + g.config);
    Json j;
    try {
        j = Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(g.config + ": " + e.what());
    }
    // a run manifest replays its resolved config
    if (j.is_object() && j.contains("tool_version") && j.contains("config")) j = j.at("config");

    std::vector<std::string> errors;
    if (!j.is_object()) throw_if_errors("config " + g.config, {"<root>: expected an object"});
    if (!j.contains("schema_version"))
        errors.push_back("schema_version: missing");
    else if (j.at("schema_version") != kSchemaVersion)
        errors.push_back("schema_version: expected " + std::to_string(kSchemaVersion) + ", got " +
                         j.at("schema_version").dump());
    if (j.contains("command") && j.at("command") != command)
        errors.push_back("command: file is for '" + j.at("command").dump() + "', running '" + command + "'");

    // flags given on the command line win over the file
    auto take = [&](const char* key, const char* flag, auto& target) {
        if (!j.contains(key)) return;
        try {
            auto v = j.at(key).get<std::decay_t<decltype(target)>>();
            if (app.count(flag) == 0) target = v;
        } catch (const nlohmann::json::exception&) {
            errors.push_back(std::string(key) + ": unexpected value " + j.at(key).dump());
        }
    };
    take("seed", "--seed", g.seed);
    take("jobs", "--jobs", g.jobs);
    take("out_dir", "--out-dir", g.out_dir);
    take("plot", "--plot", g.plot);
    take("timing", "--timing", g.timing);
    throw_if_errors("config " + g.config, errors);

    for (const auto& [key, value] : j.items())
        if (key != "schema_version" && key != "command" && key != "seed" && key != "jobs" && key != "out_dir" &&
            key != "plot" && key != "timing")
            cf.payload[key] = value;
    cf.present = true;
    return cf;
}

Json run_config_json(const std::string& command, const Globals& g, const Json& payload) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["seed"] = g.seed;
    j["jobs"] = g.jobs;
    j["plot"] = g.plot;
    j["timing"] = g.timing;
    for (const auto& [key, value] : payload.items()) j[key] = value;
    return j;
}

void write_manifest(const fs::path& dir, const std::string& name, const std::string& command, const Globals& g,
                    const Json& payload, const std::vector<std::string>& outputs,
                    const std::vector<std::string>& failures, const std::vector<std::string>& notes) {
    Json m;
    m["schema_version"] = kSchemaVersion;
    m["tool_version"] = kVersion;
    m["command"] = command;
    m["master_seed"] = g.seed;
    m["config"] = run_config_json(command, g, payload);
    m["outputs"] = outputs;
    m["failures"] = failures;
    m["notes"] = notes;
    write_text(dir / name, m.dump(2) + "\n");
}

std::vector<std::string> state_names(const std::string& system, std::size_t dim) {
    if (system == "lorenz" || system == "rossler") return {"x", "y", "z"};
    if (system == "bearing" || system == "oscillator") return {"s", "v"};
    if (system == "vanderpol" || system == "duffing") return {"x", "y"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < dim; ++i) out.push_back("x" + std::to_string(i));
    return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string system = "lorenz";
    std::vector<double> params;
    std::optional<double> rate, duration, tol, atol, rtol, record_start;
    std::vector<double> x0;
    std::string integrator;
    double noise = 0.0;
    std::string noise_family = "gaussian_floor";
    std::string output;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
    app.add_option("--system", a.system, "lorenz, rossler, vanderpol, duffing, bearing or oscillator");
    app.add_option("--params", a.params, "System parameters (rossler: a b c; vanderpol: mu; duffing: delta alpha beta; "
                                         "oscillator: k1 k2)");
    app.add_option("--rate", a.rate, "Sample rate in Hz");
    app.add_option("--duration", a.duration, "Recorded duration in s");
    app.add_option("--tol", a.tol, "Absolute and relative integrator tolerance");
    app.add_option("--atol", a.atol, "Absolute tolerance");
    app.add_option("--rtol", a.rtol, "Relative tolerance");
    app.add_option("--record-start", a.record_start, "Start of the recorded window in s");
    app.add_option("--x0", a.x0, "Initial state");
    app.add_option("--integrator", a.integrator, "rk45 or stiff");
    app.add_option("--noise", a.noise, "Noise level in percent");
    app.add_option("--noise-family", a.noise_family, "gaussian_floor or uniform");
    app.add_option("-o,--output", a.output, "Trajectory file name inside the output directory");
}

int cmd_simulate(const SimulateArgs& a, Globals& g, const CLI::App& top) {
    const ConfigFile cf = load_config(g, "simulate", top);
    SimulateArgs args = a;
    std::vector<std::string> errors;
    JsonReader in(cf.payload, "", errors);
    std::optional<SimulationSpec> file_sim;
    if (cf.present) {
        const CLI::App* sub = top.get_subcommand("simulate");
        auto file = [&](const char* key, const char* flag, auto& target) {
            const Json* v = in.raw(key);
            if (!v || sub->count(flag)) return;
            try {
                target = v->get<std::decay_t<decltype(target)>>();
            } catch (const nlohmann::json::exception&) {
                errors.push_back(std::string(key) + ": unexpected value " + v->dump());
            }
        };
        file("system", "--system", args.system);
        file("system_params", "--params", args.params);
        file("noise_pct", "--noise", args.noise);
        file("noise_family", "--noise-family", args.noise_family);
        file("output", "--output", args.output);
        if (const Json* s = in.raw("simulation")) {
            SimulationSpec base;
            try {
                base = default_simulation(args.system);
            } catch (const std::exception&) {
            }
            file_sim = simulation_from_json(*s, "simulation", errors, base);
        }
        in.finish();
        throw_if_errors("config " + g.config, errors);
    }

    const OdeSystem system = named_system(args.system, args.params);
    SimulationSpec spec = file_sim ? *file_sim : default_simulation(args.system);
    if (args.rate) spec.sample_rate = *args.rate;
    if (args.duration) spec.duration = *args.duration;
    if (args.tol) spec.abs_tol = spec.rel_tol = *args.tol;
    if (args.atol) spec.abs_tol = *args.atol;
    if (args.rtol) spec.rel_tol = *args.rtol;
    if (args.record_start) spec.record_start = *args.record_start;
    if (!args.x0.empty()) spec.initial_state = Eigen::Map<const Vector>(args.x0.data(), static_cast<Eigen::Index>(args.x0.size()));
    if (!args.integrator.empty()) spec.integrator = integrator_from_string(args.integrator);
    spec.validate(static_cast<std::size_t>(system.dim));

    Trajectory traj = simulate(system, spec);
    const NoiseFamily family = noise_family_from_string(args.noise_family);
    if (args.noise > 0.0) traj = add_noise(traj, {args.noise, family, derive_seed(g.seed, 0)});

    const fs::path dir = prepare_out_dir(g);
    const std::string file = args.output.empty() ? args.system + ".csv" : args.output;
    save_trajectory_csv(dir / file, traj, state_names(args.system, system.dim));

    Json payload;
    payload["system"] = args.system;
    payload["system_params"] = args.params;
    payload["simulation"] = to_json(spec);
    payload["noise_pct"] = args.noise;
    payload["noise_family"] = to_string(family);
    payload["output"] = file;
    write_manifest(dir, "simulate_manifest.json", "simulate", g, payload, {file}, {}, {});
    std::cout << "wrote " << (dir / file).string() << " (" << traj.rows() << " samples)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::string input;
    std::string regressor = "stlsq";
    double lambda = 0.1;
    double gamma = 1e-16;
    double cp = 0.3;
    double cp0 = 0.0;
    int steps = 10;
    std::optional<double> ridge0, ridgef;
    double final_lambda = 0.1;
    int bags = 100;
    double inclusion = 0.5;
    int degree = 3;
    bool no_constant = false;
    bool normalise = false;
    int precision = 2;
    std::string cp_scaling = "per_sample";
    std::string output = "model.json";
};

void add_fit(CLI::App& app, FitArgs& a) {
    app.add_option("input", a.input, "Trajectory CSV (t, states...)")->required();
    app.add_option("--regressor", a.regressor, "stlsq, esindy, stcv or stcv-stlsq");
    app.add_option("--lambda", a.lambda, "STLSQ magnitude threshold (inner threshold for esindy and stcv)");
    app.add_option("--gamma", a.gamma, "Ridge penalty of the STLSQ fits");
    app.add_option("--cp", a.cp, "Final CP threshold");
    app.add_option("--cp0", a.cp0, "Initial CP threshold");
    app.add_option("--steps", a.steps, "Number of ramp steps");
    app.add_option("--ridge0", a.ridge0, "Initial ridge penalty of STCV");
    app.add_option("--ridgef", a.ridgef, "Final ridge penalty of STCV");
    app.add_option("--final-lambda", a.final_lambda, "Stage-2 STLSQ threshold of stcv-stlsq");
    app.add_option("--bags", a.bags, "Number of E-SINDy bootstrap bags");
    app.add_option("--inclusion", a.inclusion, "E-SINDy inclusion threshold");
    app.add_option("--degree", a.degree, "Polynomial library degree");
    app.add_flag("--no-constant", a.no_constant, "Leave the constant term out of the library");
    app.add_flag("--normalise,--normalize", a.normalise, "Scale each state to unit max-abs before fitting");
    app.add_option("--precision", a.precision, "Decimals in the printed equations");
    app.add_option("--cp-scaling", a.cp_scaling, "per_sample or sqrt_m");
    app.add_option("-o,--output", a.output, "Model file name inside the output directory");
}

int cmd_fit(const FitArgs& a, Globals& g, const CLI::App& top) {
    const ConfigFile cf = load_config(g, "fit", top);
    if (cf.present && !cf.payload.empty()) {
        std::vector<std::string> errors;
        for (const auto& [key, value] : cf.payload.items()) errors.push_back(key + ": unknown key");
        throw_if_errors("config " + g.config + " (fit takes its settings from flags)", errors);
    }
    TrajectoryFile file = load_trajectory_csv(a.input);
    Trajectory traj = file.traj;
    std::optional<ScalingRecord> scaling;
    if (a.normalise) {
        auto [scaled, record] = normalize(traj);
        traj = std::move(scaled);
        scaling = record;
    }
    traj = differentiate(traj);
    const DesignMatrix lib = build_polynomial_library(traj.states, a.degree, !a.no_constant);

    const RegressorKind kind = regressor_from_string(a.regressor);
    StcvSchedule schedule;
    schedule.cp_initial = a.cp0;
    schedule.cp_final = a.cp;
    schedule.n_steps = a.steps;
    schedule.stlsq_lambda = a.lambda;
    schedule.cp_scaling = cp_scaling_from_string(a.cp_scaling);
    CoefficientModel model;
    switch (kind) {
        case RegressorKind::stlsq: model = stlsq(lib.values, *traj.derivs, a.lambda, a.gamma); break;
        case RegressorKind::esindy: {
            EsindySpec spec;
            spec.n_bags = a.bags;
            spec.inclusion_threshold = a.inclusion;
            spec.lambda = a.lambda;
            spec.gamma = a.gamma;
            spec.seed = g.seed;
            model = esindy(lib.values, *traj.derivs, spec);
            break;
        }
        case RegressorKind::stcv:
            schedule.ridge_initial = a.ridge0.value_or(a.gamma);
            schedule.ridge_final = a.ridgef.value_or(a.gamma);
            model = stcv(lib.values, *traj.derivs, schedule);
            break;
        case RegressorKind::stcv_stlsq:
            schedule.ridge_initial = a.ridge0.value_or(1e-1);
            schedule.ridge_final = a.ridgef.value_or(schedule.ridge_initial);
            model = stcv_stlsq(lib.values, *traj.derivs, schedule, a.final_lambda, a.gamma);
            break;
    }
    model = with_terms(std::move(model), lib);

    std::cout << format_equations(model, file.names, a.precision);
    if (scaling) {
        std::cout << "(coefficients in the normalised frame; scales";
        for (Eigen::Index i = 0; i < scaling->scales.size(); ++i) std::cout << ' ' << scaling->scales(i);
        std::cout << ")\n";
    }

    const fs::path dir = prepare_out_dir(g);
    write_text(dir / a.output, model_to_json(model, file.names, scaling).dump(2) + "\n");
    Json payload;
    payload["input"] = a.input;
    payload["regressor"] = to_string(kind);
    payload["fit_meta"] = model_to_json(model).at("fit_meta");
    payload["degree"] = a.degree;
    payload["include_constant"] = !a.no_constant;
    payload["normalise"] = a.normalise;
    write_manifest(dir, "fit_manifest.json", "fit", g, payload, {a.output}, {}, {});
    return 0;
}

// ---------------------------------------------------------------------------
// experiments

RegressorConfig regressor(RegressorKind kind) {
    RegressorConfig cfg;
    cfg.kind = kind;
    return cfg;
}

struct SweepArgs {
    std::string system;
    std::vector<double> levels;
    std::optional<int> realisations;
    std::vector<std::string> regressors;
    std::vector<std::string> scalings;
    std::string noise_family;
};

void add_sweep(CLI::App& app, SweepArgs& a) {
    app.add_option("--system", a.system, "Benchmark system");
    app.add_option("--levels", a.levels, "Noise levels in percent");
    app.add_option("--realisations", a.realisations, "Noisy datasets per level");
    app.add_option("--regressors", a.regressors, "stlsq esindy stcv stcv-stlsq");
    app.add_option("--scalings", a.scalings, "raw and/or normalised");
    app.add_option("--noise-family", a.noise_family, "gaussian_floor or uniform");
}

void plot_sweep(const fs::path& dir, const SweepResult& r, const ExperimentSpec& spec, std::vector<std::string>& outputs) {
    for (Scaling s : spec.scalings) {
        std::vector<svg::Series> series;
        for (const auto& reg : spec.regressors) {
            svg::Series line{to_string(reg.kind), {}};
            for (double p : spec.noise_levels) line.y.push_back(r.rate(p, s, line.name));
            series.push_back(std::move(line));
        }
        const std::string name = "success_" + to_string(s) + ".svg";
        write_text(dir / name, svg::line_plot(r.system + " (" + to_string(s) + ")", "noise level (%)", "success rate",
                                              spec.noise_levels, series));
        outputs.push_back(name);
    }
}

int cmd_sweep(const SweepArgs& a, Globals& g, const CLI::App& top) {
    const ConfigFile cf = load_config(g, "sweep", top);
    ExperimentSpec spec;
    spec.regressors = {regressor(RegressorKind::stlsq), regressor(RegressorKind::esindy),
                       regressor(RegressorKind::stcv), regressor(RegressorKind::stcv_stlsq)};
    std::vector<std::string> errors;
    JsonReader in(cf.payload, "", errors);
    experiment_from_json(in, spec);
    in.finish();
    throw_if_errors("config " + g.config, errors);

    if (!a.system.empty()) {
        spec.system = a.system;
        spec.simulation.reset();
    }
    if (!a.levels.empty()) spec.noise_levels = a.levels;
    if (a.realisations) spec.realisations = *a.realisations;
    if (!a.regressors.empty()) {
        spec.regressors.clear();
        for (const auto& r : a.regressors) spec.regressors.push_back(regressor(regressor_from_string(r)));
    }
    if (!a.scalings.empty()) {
        spec.scalings.clear();
        for (const auto& s : a.scalings) spec.scalings.push_back(scaling_from_string(s));
    }
    if (!a.noise_family.empty()) spec.noise_family = noise_family_from_string(a.noise_family);
    spec.seed = g.seed;

    const SweepResult r = run_noise_sweep(spec, {g.jobs, g.timing});
    const fs::path dir = prepare_out_dir(g);
    std::vector<std::string> outputs{"results.csv", "summary.csv"};
    write_file(dir / "results.csv", [&](std::ostream& os) { write_results_csv(os, r); });
    write_file(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, r); });
    if (g.plot) plot_sweep(dir, r, spec, outputs);
    write_manifest(dir, "manifest.json", "sweep", g, to_json(spec), outputs, r.failures, r.notes);

    for (const auto& s : r.summary)
        std::cout << r.system << ' ' << to_string(s.scaling) << ' ' << s.noise_pct << "% " << s.regressor << ": "
                  << s.success_rate << " (" << s.trials << " trials)\n";
    if (!r.failures.empty()) std::cout << r.failures.size() << " failed cells, see manifest.json\n";
    return 0;
}

struct GridArgs {
    std::string system;
    std::vector<double> rates, durations;
    std::optional<double> noise;
    std::optional<int> realisations;
    std::string regressor, scaling;
};

void add_grid(CLI::App& app, GridArgs& a) {
    app.add_option("--system", a.system, "Benchmark system");
    app.add_option("--rates", a.rates, "Sample rates in Hz");
    app.add_option("--durations", a.durations, "Durations in s");
    app.add_option("--noise", a.noise, "Noise level in percent");
    app.add_option("--realisations", a.realisations, "Noisy datasets per cell");
    app.add_option("--regressor", a.regressor, "Regressor evaluated in every cell");
    app.add_option("--scaling", a.scaling, "raw or normalised");
}

int cmd_sampling_grid(const GridArgs& a, Globals& g, const CLI::App& top) {
    const ConfigFile cf = load_config(g, "sampling-grid", top);
    SamplingGridSpec spec;
    std::vector<std::string> errors;
    JsonReader in(cf.payload, "", errors);
    sampling_grid_from_json(in, spec);
    in.finish();
    throw_if_errors("config " + g.config, errors);
    if (!a.system.empty()) {
        spec.system = a.system;
        spec.simulation.reset();
    }
    if (!a.rates.empty()) spec.rates = a.rates;
    if (!a.durations.empty()) spec.durations = a.durations;
    if (a.noise) spec.noise_pct = *a.noise;
    if (a.realisations) spec.realisations = *a.realisations;
    if (!a.regressor.empty()) spec.regressor = regressor(regressor_from_string(a.regressor));
    if (!a.scaling.empty()) spec.scaling = scaling_from_string(a.scaling);
    spec.seed = g.seed;

    const SamplingGridResult r = run_sampling_grid(spec, {g.jobs, false});
    const fs::path dir = prepare_out_dir(g);
    std::vector<std::string> outputs{"sampling_grid.csv"};
    write_file(dir / "sampling_grid.csv", [&](std::ostream& os) { write_sampling_grid_csv(os, r); });
    if (g.plot) {
        write_text(dir / "sampling_grid.svg",
                   svg::heat_map(spec.system + " " + to_string(spec.regressor.kind) + ", " +
                                     std::to_string(spec.noise_pct) + "% noise",
                                 "sample rate (Hz)", "duration (s)", r.rates, r.durations, r.success));
        outputs.push_back("sampling_grid.svg");
    }
    write_manifest(dir, "manifest.json", "sampling-grid", g, to_json(spec), outputs, r.invalid, {});
    std::cout << "success rate (rows: rate, columns: duration)\n" << r.success << "\n";
    if (!r.invalid.empty()) std::cout << r.invalid.size() << " invalid cells, see manifest.json\n";
    return 0;
}

struct BiasArgs {
    std::optional<int> points, realisations;
    std::optional<double> noise, cp;
};

void add_bias(CLI::App& app, BiasArgs& a) {
    app.add_option("--points", a.points, "Points along the stiffness ramp");
    app.add_option("--realisations", a.realisations, "Noisy datasets per point");
    app.add_option("--noise", a.noise, "Noise level in percent");
    app.add_option("--cp", a.cp, "CP threshold");
}

int cmd_bias(const BiasArgs& a, Globals& g, const CLI::App& top) {
    const ConfigFile cf = load_config(g, "bias", top);
    BiasTestSpec spec;
    std::vector<std::string> errors;
    JsonReader in(cf.payload, "", errors);
    bias_from_json(in, spec);
    in.finish();
    throw_if_errors("config " + g.config, errors);
    if (a.points) spec.n_points = *a.points;
    if (a.realisations) spec.realisations = *a.realisations;
    if (a.noise) spec.noise_pct = *a.noise;
    if (a.cp) spec.cp_threshold = *a.cp;
    spec.seed = g.seed;

    const BiasTestResult r = run_bias_test(spec, {g.jobs, false});
    const fs::path dir = prepare_out_dir(g);
    std::vector<std::string> outputs{"bias.csv"};
    write_file(dir / "bias.csv", [&](std::ostream& os) { write_bias_csv(os, r); });
    if (g.plot) {
        std::vector<double> k2;
        svg::Series lin{"linear", {}}, mix{"mixed", {}}, non{"nonlinear", {}}, cpl{"CP of s", {}}, cpc{"CP of s^3", {}};
        for (const auto& p : r.points) {
            k2.push_back(p.k2);
            lin.y.push_back(p.rate_linear);
            mix.y.push_back(p.rate_mixed);
            non.y.push_back(p.rate_nonlinear);
            cpl.y.push_back(p.mean_cp_linear);
            cpc.y.push_back(p.mean_cp_cubic);
        }
        write_text(dir / "bias_rates.svg", svg::line_plot("model identification rate", "k2", "rate", k2, {lin, mix, non}));
        write_text(dir / "bias_cp.svg", svg::line_plot("mean coefficient presence", "k2", "|CP|", k2, {cpl, cpc}));
        outputs.push_back("bias_rates.svg");
        outputs.push_back("bias_cp.svg");
    }
    std::vector<std::string> failures;
    for (const auto& p : r.points)
        if (p.failed) failures.push_back("k1=" + std::to_string(p.k1) + ": " + std::to_string(p.failed) + " failed fits");
    write_manifest(dir, "manifest.json", "bias", g, to_json(spec), outputs, failures,
                   {"CP curve crossings: " + std::to_string(r.crossings)});
    for (const auto& p : r.points)
        std::cout << "k1=" << p.k1 << " k2=" << p.k2 << " linear " << p.rate_linear << " mixed " << p.rate_mixed
                  << " nonlinear " << p.rate_nonlinear << " | CP " << p.mean_cp_linear << " / " << p.mean_cp_cubic
                  << "\n";
    std::cout << "CP curves cross " << r.crossings << " time(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse identification of nonlinear dynamics: simulation, fitting and benchmarks"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "Output directory (default $SINDY_OUT_DIR or ./sindy-out)");
    app.add_flag("--plot", g.plot, "Also write SVG plots");
    app.add_flag("--timing", g.timing, "Record per-cell wall time (results then differ between runs)");
    app.add_option("--config", g.config, "JSON config file or run manifest");
    app.fallthrough();

    SimulateArgs sim;
    FitArgs fit;
    SweepArgs sweep;
    GridArgs grid;
    BiasArgs bias;
    CLI::App* c_sim = app.add_subcommand("simulate", "Integrate a benchmark system and write a trajectory CSV");
    CLI::App* c_fit = app.add_subcommand("fit", "Fit a sparse model to a trajectory CSV");
    CLI::App* c_sweep = app.add_subcommand("sweep", "Success rate versus noise level");
    CLI::App* c_grid = app.add_subcommand("sampling-grid", "Success rate over sample rate and duration");
    CLI::App* c_bias = app.add_subcommand("bias", "Linear versus cubic stiffness bias test");
    add_simulate(*c_sim, sim);
    add_fit(*c_fit, fit);
    add_sweep(*c_sweep, sweep);
    add_grid(*c_grid, grid);
    add_bias(*c_bias, bias);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*c_sim) return cmd_simulate(sim, g, app);
        if (*c_fit) return cmd_fit(fit, g, app);
        if (*c_sweep) return cmd_sweep(sweep, g, app);
        if (*c_grid) return cmd_sampling_grid(grid, g, app);
        if (*c_bias) return cmd_bias(bias, g, app);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
