#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sindy/bench.hpp"
#include "sindy/errors.hpp"

using namespace sindy;

namespace {

CoefficientModel truth_model(const OdeSystem& sys, int n_vars) {
    const auto terms = polynomial_terms(n_vars, 3, true);
    CoefficientModel m;
    m.xi = sys.true_coefficients(terms);
    m.support = sys.true_support(terms);
    m.terms = std::make_shared<const std::vector<TermDescriptor>>(terms);
    return m;
}

RegressorConfig regressor(RegressorKind kind) {
    RegressorConfig r;
    r.kind = kind;
    return r;
}

ExperimentSpec small_lorenz_sweep() {
    ExperimentSpec spec;
    spec.system = "lorenz";
    auto sim = default_simulation("lorenz");
    sim.duration = 4.0;
    spec.simulation = sim;
    spec.noise_levels = {0.0, 0.5};
    spec.realisations = 2;
    spec.regressors = {regressor(RegressorKind::stlsq), regressor(RegressorKind::esindy),
                       regressor(RegressorKind::stcv), regressor(RegressorKind::stcv_stlsq)};
    spec.regressors[1].n_bags = 10;
    spec.seed = 3;
    return spec;
}

}  // namespace

TEST_CASE("Lorenz STLSQ grid spans 1% to 90% of the smallest coefficient") {
    const auto g = make_hyper_grid(RegressorKind::stlsq, "lorenz", lorenz_system());
    REQUIRE(g.values.size() == 10);
    CHECK(g.values.front() == doctest::Approx(0.01));
    CHECK(g.values.back() == doctest::Approx(0.90));
    CHECK(g.values[1] - g.values[0] == doctest::Approx(0.0989).epsilon(1e-3));
    CHECK(g.spacing == Spacing::linear);
    CHECK(g.derivation == GridDerivation::fraction_of_min_coefficient);
}

TEST_CASE("CP grids are geometric over the tabulated ranges") {
    const auto g = make_hyper_grid(RegressorKind::stcv, "lorenz-normalised", lorenz_system());
    REQUIRE(g.values.size() == 10);
    CHECK(g.values.front() == doctest::Approx(0.001));
    CHECK(g.values.back() == doctest::Approx(3.0));
    for (std::size_t i = 2; i < g.values.size(); ++i)
        CHECK(g.values[i] / g.values[i - 1] == doctest::Approx(g.values[1] / g.values[0]));
    CHECK(cp_range("duffing").cascade_ridge == 1e2);
    CHECK(cp_range("bearing-normalised").hi == 0.03);
    CHECK(cp_range("rossler-normalised").cascade_ridge == 1e-5);
    CHECK_THROWS_AS(cp_range("pendulum"), ConfigError);
    CHECK(problem_key("lorenz", Scaling::normalised) == "lorenz-normalised");
}

TEST_CASE("E-SINDy grid runs from 0.1 to 0.9") {
    const auto g = make_hyper_grid(RegressorKind::esindy, "lorenz", lorenz_system());
    CHECK(g.values.front() == doctest::Approx(0.10));
    CHECK(g.values.back() == doctest::Approx(0.90));
}

TEST_CASE("grid helpers") {
    CHECK(linear_values(1, 2, 1) == std::vector<double>{1});
    CHECK(linear_values(0, 1, 3) == std::vector<double>{0, 0.5, 1});
    CHECK(geometric_values(1, 100, 3)[1] == doctest::Approx(10));
    CHECK_THROWS(geometric_values(0, 1, 3));
}

TEST_CASE("sparsity match is exact support equality") {
    const auto sys = lorenz_system();
    auto m = truth_model(sys, 3);
    CHECK(sparsity_match(m, sys));
    CHECK(sparsity_match(m, m.support));
    m.support(0, 0) = true;
    CHECK_FALSE(sparsity_match(m, sys));
    m = truth_model(sys, 3);
    m.support(1, 0) = false;
    CHECK_FALSE(sparsity_match(m, sys));
    CHECK_THROWS_AS(sparsity_match(m, Mask::Constant(10, 3, false)), std::invalid_argument);
}

TEST_CASE("oscillator model classification") {
    CHECK(classify_oscillator_model(truth_model(bias_oscillator(300, 0), 2)) == ModelForm::linear);
    CHECK(classify_oscillator_model(truth_model(bias_oscillator(0, 1000), 2)) == ModelForm::nonlinear);
    CHECK(classify_oscillator_model(truth_model(bias_oscillator(300, 1000), 2)) == ModelForm::mixed);
    CHECK(classify_oscillator_model(truth_model(bias_oscillator(0, 0), 2)) == ModelForm::other);
    auto m = truth_model(bias_oscillator(300, 0), 2);
    m.support(0, 0) = true;  // constant in the kinematic equation
    CHECK(classify_oscillator_model(m) == ModelForm::other);
    m = truth_model(bias_oscillator(300, 0), 2);
    m.support(0, 1) = true;  // constant in the velocity equation
    CHECK(classify_oscillator_model(m) == ModelForm::other);
}

TEST_CASE("curve crossings") {
    CHECK(count_crossings({3, 2, 1, 0}, {0, 1, 2, 3}) == 1);
    CHECK(count_crossings({1, 0, 1, 0}, {0, 1, 0, 1}) == 3);
    CHECK(count_crossings({1, 1, 2}, {1, 1, 2}) == 0);
    CHECK(count_crossings({2, 1, 1, 0}, {0, 1, 1, 2}) == 1);
    CHECK_THROWS(count_crossings({1}, {1, 2}));
}

TEST_CASE("noise-free unscaled Lorenz sweep succeeds everywhere for STLSQ") {
    ExperimentSpec spec;
    spec.noise_levels = {0.0};
    spec.realisations = 1;
    spec.scalings = {Scaling::raw};
    spec.regressors = {regressor(RegressorKind::stlsq)};
    const auto r = run_noise_sweep(spec);
    CHECK(r.rate(0.0, Scaling::raw, "stlsq") == 1.0);
    CHECK(r.cells.size() == 10);
    CHECK_THROWS_AS(r.rate(0.1, Scaling::raw, "stlsq"), std::out_of_range);
}

TEST_CASE("single realisation with a single grid value is one sparsity match") {
    ExperimentSpec spec;
    spec.noise_levels = {0.0};
    spec.realisations = 1;
    spec.scalings = {Scaling::raw};
    spec.regressors = {regressor(RegressorKind::stlsq)};
    spec.regressors[0].grid = {0.5};
    const auto r = run_noise_sweep(spec);
    REQUIRE(r.cells.size() == 1);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.cells[0].success == r.trials[0].success);
    CHECK(r.cells[0].n_active == 7);
    CHECK(r.trials[0].best_hyper == std::optional<double>(0.5));
}

TEST_CASE("summary has one row per level, scaling and regressor") {
    const auto r = run_noise_sweep(small_lorenz_sweep());
    CHECK(r.summary.size() == 2 * 2 * 4);
    for (const auto& row : r.summary) CHECK(row.trials == 2);
    std::ostringstream summary;
    write_summary_csv(summary, r);
    CHECK(summary.str().rfind("system,scaling,noise_pct,regressor,success_rate,trials,failed_cells\n", 0) == 0);
    std::ostringstream results;
    write_results_csv(results, r);
    std::size_t lines = 0;
    for (char c : results.str()) lines += c == '\n';
    CHECK(lines == r.cells.size() + 1);
}

TEST_CASE("sweep results do not depend on the worker count") {
    const auto spec = small_lorenz_sweep();
    std::ostringstream a, b;
    write_results_csv(a, run_noise_sweep(spec, {1, false}));
    write_results_csv(b, run_noise_sweep(spec, {3, false}));
    CHECK(a.str() == b.str());
}

TEST_CASE("a sweep on a diverging setup reports failures instead of throwing") {
    ExperimentSpec spec;
    spec.system = "vanderpol";
    spec.system_params = {1.0};
    auto sim = default_simulation("vanderpol");
    sim.initial_state(0) = 1e200;
    sim.integrator = Integrator::adaptive_rk45;
    spec.simulation = sim;
    spec.noise_levels = {0.0};
    spec.realisations = 1;
    spec.regressors = {regressor(RegressorKind::stlsq)};
    SweepResult r;
    CHECK_NOTHROW(r = run_noise_sweep(spec));
    CHECK_FALSE(r.failures.empty());
}

TEST_CASE("experiment validation lists every problem") {
    ExperimentSpec spec;
    spec.realisations = 0;
    spec.noise_levels = {-1.0};
    try {
        spec.validate();
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("realisations") != std::string::npos);
        CHECK(msg.find("noise") != std::string::npos);
    }
}

TEST_CASE("sampling grid marks too-short records invalid") {
    SamplingGridSpec spec;
    spec.rates = {1.0, 100.0};
    spec.durations = {1.0, 2.0};
    spec.realisations = 1;
    spec.scaling = Scaling::raw;
    spec.regressor.grid = {0.5};
    const auto r = run_sampling_grid(spec);
    CHECK(std::isnan(r.success(0, 0)));  // 2 samples
    CHECK(r.success(0, 1) == r.success(0, 1));  // 3 samples: valid, whatever the outcome
    CHECK(r.success(1, 1) == 1.0);
    CHECK(r.invalid.size() == 1);
    std::ostringstream os;
    write_sampling_grid_csv(os, r);
    CHECK(os.str().find("1,1,,0\n") != std::string::npos);
}

TEST_CASE("bias test bookkeeping on a tiny run") {
    BiasTestSpec spec;
    spec.n_points = 3;
    spec.realisations = 4;
    const auto r = run_bias_test(spec);
    REQUIRE(r.points.size() == 3);
    CHECK(r.points.front().k1 == 300.0);
    CHECK(r.points.front().k2 == 0.0);
    CHECK(r.points.back().k1 == 0.0);
    CHECK(r.points.back().k2 == 1000.0);
    for (const auto& p : r.points)
        CHECK(p.rate_linear + p.rate_mixed + p.rate_nonlinear + p.rate_other == doctest::Approx(1.0));
    std::ostringstream os;
    write_bias_csv(os, r);
    const std::string text = os.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
