#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sindy/bench.hpp"
#include "sindy/config.hpp"
#include "sindy/errors.hpp"
#include "sindy/io.hpp"
#include "sindy/version.hpp"

namespace py = pybind11;
using namespace sindy;

namespace {

Trajectory make_traj(const Matrix& states, double dt) {
    Trajectory t;
    t.states = states;
    t.times = Vector::LinSpaced(states.rows(), 0.0, dt * static_cast<double>(states.rows() - 1));
    return t;
}

py::dict posterior_dict(const PosteriorStats& st) {
    py::dict d;
    d["active"] = st.active;
    d["mean"] = st.mean;
    d["std"] = st.std;
    d["cp"] = st.cp;
    d["m"] = st.m;
    d["noise_var"] = st.noise_var;
    d["floored"] = st.floored;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sparse identification of nonlinear dynamics with STLSQ, E-SINDy and STCV";
    m.attr("__version__") = std::string(kVersion);

    static py::exception<Error> base(m, "SindyError");
    py::register_exception<DataQualityError>(m, "DataQualityError", base.ptr());
    py::register_exception<RankDeficiencyError>(m, "RankDeficiencyError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

    py::class_<CoefficientModel>(m, "Model")
        .def_property_readonly("xi", [](const CoefficientModel& c) { return c.xi; })
        .def_property_readonly("support", [](const CoefficientModel& c) { return Eigen::MatrixX<bool>(c.support.matrix()); })
        .def_property_readonly("cp", [](const CoefficientModel& c) { return c.cp; })
        .def_property_readonly("regressor", [](const CoefficientModel& c) { return c.meta.regressor; })
        .def_property_readonly("hyperparameters", [](const CoefficientModel& c) { return c.meta.hyperparameters; })
        .def_property_readonly("active_count", [](const CoefficientModel& c) { return c.active_count(); })
        .def_property_readonly("labels",
                               [](const CoefficientModel& c) {
                                   std::vector<std::string> out;
                                   if (c.terms)
                                       for (const auto& t : *c.terms) out.push_back(t.label);
                                   return out;
                               })
        .def("equations", [](const CoefficientModel& c, const std::vector<std::string>& names, int precision) {
            return format_equations(c, names, precision);
        }, py::arg("names") = std::vector<std::string>{}, py::arg("precision") = 2)
        .def("to_json", [](const CoefficientModel& c) { return model_to_json(c).dump(2); })
        .def("__repr__", [](const CoefficientModel& c) {
            return "<Model " + c.meta.regressor + ", " + std::to_string(c.active_count()) + " active terms>";
        });

    m.def("polynomial_library", [](const Matrix& X, int degree, bool include_constant) {
        auto lib = build_polynomial_library(X, degree, include_constant);
        std::vector<std::string> labels;
        for (const auto& t : lib.terms) labels.push_back(t.label);
        return py::make_tuple(lib.values, labels);
    }, py::arg("X"), py::arg("degree") = 3, py::arg("include_constant") = true,
       "Design matrix of all monomials up to the given degree, plus the column labels.");

    m.def("simulate", [](const std::string& system, const std::vector<double>& params, std::optional<double> rate,
                         std::optional<double> duration, std::optional<double> tol, std::optional<Vector> x0) {
        const OdeSystem sys = named_system(system, params);
        SimulationSpec spec = default_simulation(system);
        if (rate) spec.sample_rate = *rate;
        if (duration) spec.duration = *duration;
        if (tol) spec.abs_tol = spec.rel_tol = *tol;
        if (x0) spec.initial_state = *x0;
        spec.validate(static_cast<std::size_t>(sys.dim));
        const auto traj = simulate(sys, spec);
        return py::make_tuple(traj.times, traj.states);
    }, py::arg("system"), py::arg("params") = std::vector<double>{}, py::arg("rate") = py::none(),
       py::arg("duration") = py::none(), py::arg("tol") = py::none(), py::arg("x0") = py::none(),
       "Integrate a built-in system and return (times, states).");

    m.def("add_noise", [](const Matrix& X, double level, const std::string& family, std::uint64_t seed) {
        return add_noise(make_traj(X, 1.0), {level, noise_family_from_string(family), seed}).states;
    }, py::arg("X"), py::arg("level"), py::arg("family") = "gaussian_floor", py::arg("seed") = 0);

    m.def("finite_difference", &finite_difference, py::arg("X"), py::arg("dt"));

    m.def("normalize", [](const Matrix& X) {
        const auto [t, rec] = normalize(make_traj(X, 1.0));
        return py::make_tuple(t.states, rec.scales);
    }, py::arg("X"), "Scale each column to unit max-abs; returns (scaled, scales).");

    m.def("stlsq", [](const Matrix& theta, const Matrix& xdot, double lam, double gamma) {
        return stlsq(theta, xdot, lam, gamma);
    }, py::arg("theta"), py::arg("xdot"), py::arg("lam"), py::arg("gamma") = 1e-16);

    m.def("stcv", [](const Matrix& theta, const Matrix& xdot, double cp, double cp0, double ridge0, double ridgef,
                     int steps, double stlsq_lambda, const std::string& cp_scaling) {
        StcvSchedule s;
        s.cp_final = cp;
        s.cp_initial = cp0;
        s.ridge_initial = ridge0;
        s.ridge_final = ridgef;
        s.n_steps = steps;
        s.stlsq_lambda = stlsq_lambda;
        s.cp_scaling = cp_scaling_from_string(cp_scaling);
        return stcv(theta, xdot, s);
    }, py::arg("theta"), py::arg("xdot"), py::arg("cp") = 0.3, py::arg("cp0") = 0.0, py::arg("ridge0") = 1e-16,
       py::arg("ridgef") = 1e-16, py::arg("steps") = 10, py::arg("stlsq_lambda") = 0.01,
       py::arg("cp_scaling") = "per_sample");

    m.def("stcv_stlsq", [](const Matrix& theta, const Matrix& xdot, double cp, double ridge, double lam,
                           double gamma, int steps, double stlsq_lambda) {
        StcvSchedule s;
        s.cp_final = cp;
        s.ridge_initial = s.ridge_final = ridge;
        s.n_steps = steps;
        s.stlsq_lambda = stlsq_lambda;
        return stcv_stlsq(theta, xdot, s, lam, gamma);
    }, py::arg("theta"), py::arg("xdot"), py::arg("cp"), py::arg("ridge"), py::arg("lam"), py::arg("gamma") = 1e-16,
       py::arg("steps") = 10, py::arg("stlsq_lambda") = 0.01);

    m.def("esindy", [](const Matrix& theta, const Matrix& xdot, double lam, double inclusion, int n_bags,
                       double gamma, std::uint64_t seed, bool bootstrap) {
        EsindySpec s;
        s.lambda = lam;
        s.inclusion_threshold = inclusion;
        s.n_bags = n_bags;
        s.gamma = gamma;
        s.seed = seed;
        s.bootstrap = bootstrap;
        return esindy(theta, xdot, s);
    }, py::arg("theta"), py::arg("xdot"), py::arg("lam"), py::arg("inclusion") = 0.5, py::arg("n_bags") = 100,
       py::arg("gamma") = 1e-16, py::arg("seed") = 0, py::arg("bootstrap") = true);

    m.def("blr_posterior", [](const Matrix& theta, const Vector& y, double gamma, std::vector<bool> active,
                              const std::string& cp_scaling) {
        if (active.empty()) active.assign(static_cast<std::size_t>(theta.cols()), true);
        return posterior_dict(blr_posterior(theta, y, gamma, active, cp_scaling_from_string(cp_scaling)));
    }, py::arg("theta"), py::arg("y"), py::arg("gamma") = 1e-16, py::arg("active") = std::vector<bool>{},
       py::arg("cp_scaling") = "per_sample");

    m.def("run_sweep", [](const std::string& config_json, int jobs) {
        const Json j = Json::parse(config_json);
        std::vector<std::string> errors;
        ExperimentSpec spec;
        JsonReader in(j, "", errors);
        experiment_from_json(in, spec);
        in.finish();
        throw_if_errors("invalid sweep config", errors);
        SweepResult r;
        {
            py::gil_scoped_release release;
            r = run_noise_sweep(spec, {jobs, false});
        }
        py::list summary;
        for (const auto& row : r.summary) {
            py::dict d;
            d["noise_pct"] = row.noise_pct;
            d["scaling"] = to_string(row.scaling);
            d["regressor"] = row.regressor;
            d["success_rate"] = row.success_rate;
            d["trials"] = row.trials;
            d["failed_cells"] = row.failed_cells;
            summary.append(d);
        }
        std::ostringstream results;
        write_results_csv(results, r);
        py::dict out;
        out["summary"] = summary;
        out["results_csv"] = results.str();
        out["notes"] = r.notes;
        out["failures"] = r.failures;
        return out;
    }, py::arg("config_json"), py::arg("jobs") = 1,
       "Run a noise sweep from a JSON experiment config; returns summary rows and the results CSV.");
}
