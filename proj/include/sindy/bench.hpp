#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sindy/dynamics.hpp"
#include "sindy/preprocess.hpp"
#include "sindy/regression.hpp"

namespace sindy {

enum class Scaling { raw, normalised };
std::string to_string(Scaling scaling);
Scaling scaling_from_string(const std::string& name);

enum class RegressorKind { stlsq, esindy, stcv, stcv_stlsq };
std::string to_string(RegressorKind kind);
RegressorKind regressor_from_string(const std::string& name);

enum class Spacing { linear, geometric };
enum class GridDerivation { absolute, fraction_of_min_coefficient };

struct HyperGrid {
    RegressorKind regressor = RegressorKind::stlsq;
    std::vector<double> values;
    Spacing spacing = Spacing::linear;
    GridDerivation derivation = GridDerivation::absolute;
};

/// n evenly spaced values including both ends (n == 1 gives lo).
std::vector<double> linear_values(double lo, double hi, int n);
/// n log-spaced values including both ends; requires 0 < lo.
std::vector<double> geometric_values(double lo, double hi, int n);

/// Benchmark CP threshold range and the stage-1 ridge of the cascade for one problem.
struct CpRange {
    double lo = 0.0;
    double hi = 0.0;
    double cascade_ridge = 0.0;
};

/// "lorenz", "lorenz-normalised", ... as built by problem_key(). Throws ConfigError.
CpRange cp_range(const std::string& problem);
std::string problem_key(const std::string& system, Scaling scaling);

/// STLSQ: 1%..90% of the smallest true |coefficient| of truth (expressed in the fitting frame);
/// E-SINDy: inclusion 0.1..0.9; STCV and the cascade: geometric CP grid over cp_range(problem).
HyperGrid make_hyper_grid(RegressorKind kind, const std::string& problem, const OdeSystem& truth, int n = 10);

/// Exact support equality. Throws std::invalid_argument when the libraries differ in size.
bool sparsity_match(const CoefficientModel& model, const Mask& truth_support);
/// Requires model.terms; the truth support is evaluated on the model's term list.
bool sparsity_match(const CoefficientModel& model, const OdeSystem& truth);

struct RegressorConfig {
    RegressorKind kind = RegressorKind::stlsq;
    /// Primary grid (lambda, inclusion threshold or CP threshold); empty derives it per problem.
    std::vector<double> grid;
    /// Cascade only: stage-2 STLSQ thresholds; empty uses the STLSQ grid of the problem.
    std::vector<double> stage2_grid;
    double gamma = 1e-16;
    int n_bags = 100;
    /// E-SINDy inner threshold; empty takes the best STLSQ threshold of a prior pass.
    std::optional<double> esindy_lambda;
    int n_steps = 10;
    /// Magnitude threshold inside STCV; empty uses the smallest STLSQ grid value.
    std::optional<double> stcv_lambda;
    /// Cascade stage-1 ridge; empty uses the problem's tabulated value.
    std::optional<double> cascade_ridge;
    CpScaling cp_scaling = CpScaling::per_sample;
};

struct ExperimentSpec {
    std::string system = "lorenz";
    std::vector<double> system_params;
    /// Unset means default_simulation(system).
    std::optional<SimulationSpec> simulation;
    std::vector<double> noise_levels{0.0, 0.1, 0.5, 1.0};
    NoiseFamily noise_family = NoiseFamily::gaussian_floor;
    int realisations = 100;
    std::vector<Scaling> scalings{Scaling::raw, Scaling::normalised};
    std::vector<RegressorConfig> regressors;
    int library_degree = 3;
    bool include_constant = true;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming every problem found.
    void validate() const;
    SimulationSpec resolved_simulation() const;
};

struct RunOptions {
    int jobs = 1;
    /// Per-cell timings make the results CSV run-dependent, so they are off unless asked for.
    bool record_wall_time = false;
};

/// One fit of one grid value.
struct CellResult {
    double noise_pct = 0.0;
    Scaling scaling = Scaling::raw;
    std::string regressor;
    int realisation = 0;
    std::uint64_t seed = 0;
    double hyper_value = 0.0;
    /// Cascade stage-2 threshold; NaN for single-grid regressors.
    double secondary_value = 0.0;
    bool success = false;
    std::size_t n_active = 0;
    double wall_ms = 0.0;
    /// "ok" or the error that prevented the fit.
    std::string status = "ok";
};

/// Grid-search outcome of one regressor on one dataset.
struct TrialResult {
    double noise_pct = 0.0;
    Scaling scaling = Scaling::raw;
    std::string regressor;
    int realisation = 0;
    std::uint64_t seed = 0;
    bool success = false;
    /// Smallest grid value achieving a match.
    std::optional<double> best_hyper;
    std::optional<double> best_secondary;
};

struct SummaryRow {
    double noise_pct = 0.0;
    Scaling scaling = Scaling::raw;
    std::string regressor;
    double success_rate = 0.0;
    int trials = 0;
    int successes = 0;
    int failed_cells = 0;
};

struct SweepResult {
    std::string system;
    std::vector<CellResult> cells;
    std::vector<TrialResult> trials;
    std::vector<SummaryRow> summary;
    /// Human-readable notes, e.g. the E-SINDy threshold chosen per level.
    std::vector<std::string> notes;
    /// Cells or levels that could not be evaluated.
    std::vector<std::string> failures;

    /// Success rate of a summary row; throws std::out_of_range when absent.
    double rate(double noise_pct, Scaling scaling, const std::string& regressor) const;
};

/// Success rate versus noise for every regressor and scaling; every trial consumes the same
/// noisy dataset for all regressors. Results do not depend on options.jobs.
SweepResult run_noise_sweep(const ExperimentSpec& spec, const RunOptions& options = {});

void write_results_csv(std::ostream& os, const SweepResult& result);
void write_summary_csv(std::ostream& os, const SweepResult& result);

struct SamplingGridSpec {
    std::string system = "lorenz";
    std::vector<double> system_params;
    std::optional<SimulationSpec> simulation;  // rate and duration are overridden per cell
    std::vector<double> rates = linear_values(20.0, 200.0, 10);
    std::vector<double> durations = linear_values(1.0, 10.0, 10);
    double noise_pct = 0.0;
    NoiseFamily noise_family = NoiseFamily::gaussian_floor;
    Scaling scaling = Scaling::raw;
    RegressorConfig regressor;
    int realisations = 10;
    int library_degree = 3;
    bool include_constant = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SamplingGridResult {
    std::vector<double> rates;
    std::vector<double> durations;
    /// rates x durations; NaN marks an invalid cell.
    Matrix success;
    std::vector<std::string> invalid;
};

SamplingGridResult run_sampling_grid(const SamplingGridSpec& spec, const RunOptions& options = {});
void write_sampling_grid_csv(std::ostream& os, const SamplingGridResult& result);

enum class ModelForm { linear, mixed, nonlinear, other };
std::string to_string(ModelForm form);

/// Form of an oscillator model over (s, v): s' = v in the first equation, v' = damping plus the
/// linear and/or cubic stiffness in the second. Requires model.terms.
ModelForm classify_oscillator_model(const CoefficientModel& model);

struct BiasTestSpec {
    int n_points = 20;
    double k1_max = 300.0;
    double k2_max = 1000.0;
    double noise_pct = 1.0;
    NoiseFamily noise_family = NoiseFamily::gaussian_floor;
    int realisations = 100;
    double cp_threshold = 0.3;
    double gamma = 1e-16;
    int n_steps = 10;
    double stcv_lambda = 0.01;
    CpScaling cp_scaling = CpScaling::per_sample;
    std::optional<SimulationSpec> simulation;
    int library_degree = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BiasPoint {
    double k1 = 0.0;
    double k2 = 0.0;
    int trials = 0;
    double rate_linear = 0.0;
    double rate_mixed = 0.0;
    double rate_nonlinear = 0.0;
    double rate_other = 0.0;
    /// Mean |CP| of the s and s^3 terms of the velocity equation (0 when eliminated).
    double mean_cp_linear = 0.0;
    double mean_cp_cubic = 0.0;
    int failed = 0;
};

struct BiasTestResult {
    std::vector<BiasPoint> points;
    /// Sign changes of mean_cp_linear - mean_cp_cubic along the ramp.
    int crossings = 0;
};

/// k1 ramps from k1_max to 0 while k2 ramps from 0 to k2_max; each point is fitted by STCV on
/// normalised noisy data.
BiasTestResult run_bias_test(const BiasTestSpec& spec, const RunOptions& options = {});
void write_bias_csv(std::ostream& os, const BiasTestResult& result);

/// Number of strict sign changes of a - b, ignoring entries where they are equal.
int count_crossings(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace sindy
