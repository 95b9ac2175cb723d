#include "sindy/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "sindy/errors.hpp"
#include "sindy/library.hpp"

namespace sindy {

// ---------------------------------------------------------------------------
// enums and grids

std::string to_string(Scaling scaling) { return scaling == Scaling::raw ? "raw" : "normalised"; }

Scaling scaling_from_string(const std::string& name) {
    if (name == "raw" || name == "unscaled") return Scaling::raw;
    if (name == "normalised" || name == "normalized" || name == "scaled") return Scaling::normalised;
    throw ConfigError("unknown scaling '" + name + "' (expected raw or normalised)");
}

std::string to_string(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::stlsq: return "stlsq";
        case RegressorKind::esindy: return "esindy";
        case RegressorKind::stcv: return "stcv";
        case RegressorKind::stcv_stlsq: return "stcv-stlsq";
    }
    return "?";
}

RegressorKind regressor_from_string(const std::string& name) {
    if (name == "stlsq") return RegressorKind::stlsq;
    if (name == "esindy" || name == "e-sindy") return RegressorKind::esindy;
    if (name == "stcv") return RegressorKind::stcv;
    if (name == "stcv-stlsq" || name == "stcv_stlsq") return RegressorKind::stcv_stlsq;
    throw ConfigError("unknown regressor '" + name + "' (expected stlsq, esindy, stcv or stcv-stlsq)");
}

std::vector<double> linear_values(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("a grid needs at least one value");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return v;
}

std::vector<double> geometric_values(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("geometric grids need positive endpoints");
    std::vector<double> v = linear_values(std::log(lo), std::log(hi), n);
    for (double& x : v) x = std::exp(x);
    v.front() = lo;
    if (n > 1) v.back() = hi;
    return v;
}

std::string problem_key(const std::string& system, Scaling scaling) {
    return scaling == Scaling::normalised ? system + "-normalised" : system;
}

CpRange cp_range(const std::string& problem) {
    // CP threshold ranges and cascade ridge penalties per benchmark problem
    static const std::vector<std::pair<std::string, CpRange>> table = {
        {"lorenz", {0.001, 1.0, 1e-1}},
        {"lorenz-normalised", {0.001, 3.0, 1e-1}},
        {"rossler", {0.001, 0.8, 1e-1}},
        {"rossler-normalised", {0.1, 1.2, 1e-5}},
        {"vanderpol", {0.001, 0.2, 1e-1}},
        {"vanderpol-normalised", {0.001, 0.2, 1e-1}},
        {"duffing", {0.001, 0.2, 1e2}},
        {"duffing-normalised", {0.001, 0.2, 1e2}},
        {"bearing-normalised", {0.001, 0.03, 1e0}},
    };
    for (const auto& [name, range] : table)
        if (name == problem) return range;
    throw ConfigError("no tabulated CP range for problem '" + problem + "'; give the grid explicitly");
}

HyperGrid make_hyper_grid(RegressorKind kind, const std::string& problem, const OdeSystem& truth, int n) {
    HyperGrid g;
    g.regressor = kind;
    switch (kind) {
        case RegressorKind::stlsq: {
            const double c = truth.min_abs_coefficient();
            if (!(c > 0.0)) throw ConfigError("system '" + truth.name + "' has no nonzero true coefficient");
            g.values = linear_values(0.01 * c, 0.90 * c, n);
            g.derivation = GridDerivation::fraction_of_min_coefficient;
            break;
        }
        case RegressorKind::esindy:
            g.values = linear_values(0.10, 0.90, n);
            break;
        case RegressorKind::stcv:
        case RegressorKind::stcv_stlsq: {
            const CpRange r = cp_range(problem);
            g.values = geometric_values(r.lo, r.hi, n);
            g.spacing = Spacing::geometric;
            break;
        }
    }
    return g;
}

bool sparsity_match(const CoefficientModel& model, const Mask& truth_support) {
    if (model.support.rows() != truth_support.rows() || model.support.cols() != truth_support.cols())
        throw std::invalid_argument("model support is " + std::to_string(model.support.rows()) + "x" +
                                    std::to_string(model.support.cols()) + ", truth is " +
                                    std::to_string(truth_support.rows()) + "x" +
                                    std::to_string(truth_support.cols()));
    return (model.support == truth_support).all();
}

bool sparsity_match(const CoefficientModel& model, const OdeSystem& truth) {
    if (!model.terms) throw std::invalid_argument("model carries no term list");
    for (const auto& t : truth.truth)
        if (static_cast<int>(t.exponents.size()) != truth.dim || !term_index(*model.terms, t.exponents))
            throw std::invalid_argument("true term of '" + truth.name + "' is missing from the model library");
    return sparsity_match(model, truth.true_support(*model.terms));
}

// ---------------------------------------------------------------------------
// shared machinery

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index writes only its own slot, so
/// the outcome is independent of scheduling. The first exception is rethrown after joining.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct Dataset {
    Matrix theta;
    Matrix xdot;
    std::shared_ptr<const std::vector<TermDescriptor>> terms;
    Mask truth;
};

Dataset make_dataset(const Trajectory& noisy, Scaling scaling, const OdeSystem& system, int degree,
                     bool include_constant) {
    Trajectory t = scaling == Scaling::normalised ? normalize(noisy).first : noisy;
    t = differentiate(t);
    DesignMatrix lib = build_polynomial_library(t.states, degree, include_constant);
    Dataset d;
    d.truth = system.true_support(lib.terms);
    d.theta = std::move(lib.values);
    d.xdot = std::move(*t.derivs);
    d.terms = std::make_shared<const std::vector<TermDescriptor>>(std::move(lib.terms));
    return d;
}

/// The system as seen by the regressors in one scaling: grids depend on the frame's coefficients.
struct Frame {
    Scaling scaling = Scaling::raw;
    std::string key;
    OdeSystem truth;
    std::vector<double> stlsq_grid;
};

Frame make_frame(const OdeSystem& system, const Trajectory& clean, Scaling scaling) {
    Frame f;
    f.scaling = scaling;
    f.key = problem_key(system.name, scaling);
    f.truth = scaling == Scaling::normalised ? system.rescaled(max_abs(clean.states).cwiseInverse()) : system;
    if (f.truth.min_abs_coefficient() > 0.0)
        f.stlsq_grid = make_hyper_grid(RegressorKind::stlsq, f.key, f.truth).values;
    return f;
}

struct Resolved {
    RegressorConfig cfg;
    std::string name;
    std::vector<double> grid;
    std::vector<double> stage2;
    double stcv_lambda = 0.0;
    double cascade_ridge = 0.0;
};

Resolved resolve(const RegressorConfig& cfg, const Frame& frame) {
    Resolved r;
    r.cfg = cfg;
    r.name = to_string(cfg.kind);
    auto stlsq_grid = [&]() -> const std::vector<double>& {
        if (frame.stlsq_grid.empty())
            throw ConfigError("problem '" + frame.key + "' has no true coefficients; give the grid explicitly");
        return frame.stlsq_grid;
    };
    r.grid = cfg.grid;
    if (r.grid.empty()) {
        if (cfg.kind == RegressorKind::stlsq)
            r.grid = stlsq_grid();
        else
            r.grid = make_hyper_grid(cfg.kind, frame.key, frame.truth).values;
    }
    if (cfg.kind == RegressorKind::stcv || cfg.kind == RegressorKind::stcv_stlsq)
        r.stcv_lambda = cfg.stcv_lambda ? *cfg.stcv_lambda : stlsq_grid().front();
    if (cfg.kind == RegressorKind::stcv_stlsq) {
        r.stage2 = cfg.stage2_grid.empty() ? stlsq_grid() : cfg.stage2_grid;
        r.cascade_ridge = cfg.cascade_ridge ? *cfg.cascade_ridge : cp_range(frame.key).cascade_ridge;
    }
    return r;
}

StcvSchedule schedule_for(const Resolved& r, double cp, double ridge) {
    StcvSchedule s;
    s.ridge_initial = ridge;
    s.ridge_final = ridge;
    s.cp_initial = 0.0;
    s.cp_final = cp;
    s.n_steps = r.cfg.n_steps;
    s.stlsq_lambda = r.stcv_lambda;
    s.cp_scaling = r.cfg.cp_scaling;
    return s;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Fit every grid value of one regressor on one dataset.
std::vector<CellResult> run_cells(const Dataset& d, const Resolved& r, const CellResult& base, double esindy_lambda,
                                  std::uint64_t esindy_seed, bool timing) {
    std::vector<CellResult> out;
    auto record = [&](double hyper, double secondary, auto&& fit) {
        CellResult c = base;
        c.regressor = r.name;
        c.hyper_value = hyper;
        c.secondary_value = secondary;
        const auto start = Clock::now();
        try {
            CoefficientModel m = fit();
            c.success = sparsity_match(m, d.truth);
            c.n_active = m.active_count();
        } catch (const std::exception& e) {
            c.success = false;
            c.status = e.what();
        }
        if (timing) c.wall_ms = elapsed_ms(start);
        out.push_back(std::move(c));
    };

    switch (r.cfg.kind) {
        case RegressorKind::stlsq:
            for (double lam : r.grid) record(lam, kNaN, [&] { return stlsq(d.theta, d.xdot, lam, r.cfg.gamma); });
            break;
        case RegressorKind::stcv:
            for (double cp : r.grid)
                record(cp, kNaN, [&] { return stcv(d.theta, d.xdot, schedule_for(r, cp, r.cfg.gamma)); });
            break;
        case RegressorKind::stcv_stlsq:
            for (double cp : r.grid) {
                std::optional<CoefficientModel> stage1;
                std::string stage1_error;
                try {
                    stage1 = stcv(d.theta, d.xdot, schedule_for(r, cp, r.cascade_ridge));
                } catch (const std::exception& e) {
                    stage1_error = e.what();
                }
                for (double lam : r.stage2)
                    record(cp, lam, [&] {
                        if (!stage1) throw std::runtime_error("stage 1: " + stage1_error);
                        return stlsq(d.theta, d.xdot, lam, r.cfg.gamma, stage1->support);
                    });
            }
            break;
        case RegressorKind::esindy: {
            EsindySpec spec;
            spec.n_bags = r.cfg.n_bags;
            spec.lambda = esindy_lambda;
            spec.gamma = r.cfg.gamma;
            spec.seed = esindy_seed;
            std::optional<EnsembleFit> ensemble;
            std::string error;
            const auto start = Clock::now();
            try {
                ensemble = esindy_ensemble(d.theta, d.xdot, spec);
            } catch (const std::exception& e) {
                error = e.what();
            }
            const double ensemble_ms = timing ? elapsed_ms(start) / static_cast<double>(r.grid.size()) : 0.0;
            for (double thr : r.grid) {
                record(thr, kNaN, [&] {
                    if (!ensemble) throw std::runtime_error("ensemble: " + error);
                    return esindy_select(d.theta, d.xdot, *ensemble, thr, spec.gamma);
                });
                out.back().wall_ms += ensemble_ms;
            }
            break;
        }
    }
    return out;
}

TrialResult summarise_trial(const std::vector<CellResult>& cells, const CellResult& base, const std::string& name) {
    TrialResult t;
    t.noise_pct = base.noise_pct;
    t.scaling = base.scaling;
    t.regressor = name;
    t.realisation = base.realisation;
    t.seed = base.seed;
    for (const auto& c : cells) {
        if (!c.success) continue;
        t.success = true;
        const bool better = !t.best_hyper || c.hyper_value < *t.best_hyper ||
                            (c.hyper_value == *t.best_hyper && t.best_secondary &&
                             c.secondary_value < *t.best_secondary);
        if (better) {
            t.best_hyper = c.hyper_value;
            if (!std::isnan(c.secondary_value))
                t.best_secondary = c.secondary_value;
            else
                t.best_secondary.reset();
        }
    }
    return t;
}

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------
// noise sweep

void ExperimentSpec::validate() const {
    std::vector<std::string> problems;
    if (realisations < 1) problems.push_back("realisations must be >= 1");
    if (noise_levels.empty()) problems.push_back("noise_levels must not be empty");
    for (double p : noise_levels)
        if (!(p >= 0.0) || !std::isfinite(p)) problems.push_back("noise level " + num(p) + " is not a percentage >= 0");
    if (scalings.empty()) problems.push_back("scalings must not be empty");
    if (regressors.empty()) problems.push_back("regressors must not be empty");
    if (library_degree < 1) problems.push_back("library_degree must be >= 1");
    for (const auto& r : regressors) {
        if (r.kind == RegressorKind::esindy && r.n_bags < 1) problems.push_back("esindy n_bags must be >= 1");
        if ((r.kind == RegressorKind::stcv || r.kind == RegressorKind::stcv_stlsq) && r.n_steps < 1)
            problems.push_back(to_string(r.kind) + " n_steps must be >= 1");
        if (!(r.gamma >= 0.0)) problems.push_back(to_string(r.kind) + " gamma must be >= 0");
        for (double v : r.grid)
            if (!(v >= 0.0)) problems.push_back(to_string(r.kind) + " grid value " + num(v) + " is negative");
    }
    if (!problems.empty()) {
        std::string msg = "invalid experiment:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
}

SimulationSpec ExperimentSpec::resolved_simulation() const {
    return simulation ? *simulation : default_simulation(system);
}

double SweepResult::rate(double noise_pct, Scaling scaling, const std::string& regressor) const {
    for (const auto& s : summary)
        if (s.noise_pct == noise_pct && s.scaling == scaling && s.regressor == regressor) return s.success_rate;
    throw std::out_of_range("no summary row for " + regressor + " at " + num(noise_pct) + "% (" + to_string(scaling) +
                            ")");
}

SweepResult run_noise_sweep(const ExperimentSpec& spec, const RunOptions& options) {
    spec.validate();
    SweepResult result;
    const OdeSystem system = named_system(spec.system, spec.system_params);
    result.system = system.name;
    const SimulationSpec sim = spec.resolved_simulation();

    const auto levels = spec.noise_levels.size();
    const auto reps = static_cast<std::size_t>(spec.realisations);
    const auto n_scalings = spec.scalings.size();

    Trajectory clean;
    try {
        clean = simulate(system, sim);
    } catch (const DivergenceError& e) {
        result.failures.push_back(std::string("simulation: ") + e.what());
        for (double p : spec.noise_levels)
            for (Scaling s : spec.scalings)
                for (const auto& r : spec.regressors)
                    result.summary.push_back({p, s, to_string(r.kind), 0.0, 0, 0, spec.realisations});
        return result;
    }

    std::vector<Frame> frames;
    for (Scaling s : spec.scalings) frames.push_back(make_frame(system, clean, s));

    // resolved regressors per frame (grid derivation may fail for a frame: reported, not fatal)
    std::vector<std::vector<std::optional<Resolved>>> resolved(n_scalings);
    for (std::size_t f = 0; f < n_scalings; ++f) {
        for (const auto& cfg : spec.regressors) {
            try {
                resolved[f].push_back(resolve(cfg, frames[f]));
            } catch (const std::exception& e) {
                resolved[f].emplace_back();
                result.failures.push_back(to_string(cfg.kind) + " on " + frames[f].key + ": " + e.what());
            }
        }
    }

    // E-SINDy's inner threshold comes from a prior STLSQ pass unless given.
    const bool need_prior = std::any_of(spec.regressors.begin(), spec.regressors.end(), [](const RegressorConfig& r) {
        return r.kind == RegressorKind::esindy && !r.esindy_lambda;
    });
    RegressorConfig prior_cfg;
    for (const auto& r : spec.regressors)
        if (r.kind == RegressorKind::stlsq) {
            prior_cfg = r;
            break;
        }
    std::vector<std::optional<Resolved>> prior(n_scalings);
    if (need_prior)
        for (std::size_t f = 0; f < n_scalings; ++f) try {
                prior[f] = resolve(prior_cfg, frames[f]);
            } catch (const std::exception&) {
            }

    auto noisy_for = [&](std::size_t l, std::size_t r) {
        const std::uint64_t seed = derive_seed(spec.seed, l, r);
        return std::pair{add_noise(clean, {spec.noise_levels[l], spec.noise_family, seed}), seed};
    };
    auto base_cell = [&](std::size_t l, std::size_t r, std::size_t f, std::uint64_t seed) {
        CellResult c;
        c.noise_pct = spec.noise_levels[l];
        c.scaling = spec.scalings[f];
        c.realisation = static_cast<int>(r);
        c.seed = seed;
        return c;
    };

    const std::size_t tasks = levels * reps;
    // esindy_lambda[l][f]
    std::vector<std::vector<double>> esindy_lambda(levels, std::vector<double>(n_scalings, kNaN));
    if (need_prior) {
        std::vector<std::vector<std::vector<CellResult>>> pass(tasks);
        parallel_for(tasks, options.jobs, [&](std::size_t t) {
            const std::size_t l = t / reps, r = t % reps;
            const auto [noisy, seed] = noisy_for(l, r);
            pass[t].resize(n_scalings);
            for (std::size_t f = 0; f < n_scalings; ++f) {
                if (!prior[f]) continue;
                try {
                    const Dataset d = make_dataset(noisy, spec.scalings[f], system, spec.library_degree,
                                                   spec.include_constant);
                    pass[t][f] = run_cells(d, *prior[f], base_cell(l, r, f, seed), 0.0, 0, false);
                } catch (const std::exception&) {
                }
            }
        });
        for (std::size_t l = 0; l < levels; ++l) {
            for (std::size_t f = 0; f < n_scalings; ++f) {
                if (!prior[f]) continue;
                const auto& grid = prior[f]->grid;
                std::vector<int> wins(grid.size(), 0);
                for (std::size_t r = 0; r < reps; ++r) {
                    const auto& cells = pass[l * reps + r][f];
                    for (std::size_t g = 0; g < cells.size() && g < grid.size(); ++g) wins[g] += cells[g].success;
                }
                // first maximum: ties and the no-success case resolve to the smallest value
                const auto best = static_cast<std::size_t>(std::max_element(wins.begin(), wins.end()) - wins.begin());
                esindy_lambda[l][f] = grid[best];
                result.notes.push_back("esindy lambda at " + num(spec.noise_levels[l]) + "% (" +
                                       to_string(spec.scalings[f]) + "): " + num(grid[best]) + " (" +
                                       std::to_string(wins[best]) + "/" + std::to_string(reps) + " STLSQ successes)");
            }
        }
    }

    // cells[t][f][regressor]
    std::vector<std::vector<std::vector<std::vector<CellResult>>>> cells(tasks);
    std::vector<std::string> task_errors(tasks);
    parallel_for(tasks, options.jobs, [&](std::size_t t) {
        const std::size_t l = t / reps, r = t % reps;
        const auto [noisy, seed] = noisy_for(l, r);
        cells[t].assign(n_scalings, std::vector<std::vector<CellResult>>(spec.regressors.size()));
        for (std::size_t f = 0; f < n_scalings; ++f) {
            std::optional<Dataset> d;
            std::string error;
            try {
                d = make_dataset(noisy, spec.scalings[f], system, spec.library_degree, spec.include_constant);
            } catch (const std::exception& e) {
                error = e.what();
            }
            for (std::size_t k = 0; k < spec.regressors.size(); ++k) {
                if (!resolved[f][k]) continue;
                const Resolved& res = *resolved[f][k];
                const CellResult base = base_cell(l, r, f, seed);
                if (!d) {
                    for (double v : res.grid) {
                        CellResult c = base;
                        c.regressor = res.name;
                        c.hyper_value = v;
                        c.secondary_value = kNaN;
                        c.status = "dataset: " + error;
                        cells[t][f][k].push_back(std::move(c));
                    }
                    continue;
                }
                double lam = 0.0;
                if (res.cfg.kind == RegressorKind::esindy) {
                    if (res.cfg.esindy_lambda)
                        lam = *res.cfg.esindy_lambda;
                    else if (!std::isnan(esindy_lambda[l][f]))
                        lam = esindy_lambda[l][f];
                    else
                        lam = frames[f].stlsq_grid.empty() ? 0.0 : frames[f].stlsq_grid.front();
                }
                cells[t][f][k] = run_cells(*d, res, base, lam, derive_seed(spec.seed, l, r, 1 + k),
                                           options.record_wall_time);
            }
        }
    });

    for (std::size_t l = 0; l < levels; ++l) {
        for (std::size_t f = 0; f < n_scalings; ++f) {
            for (std::size_t k = 0; k < spec.regressors.size(); ++k) {
                const std::string name = to_string(spec.regressors[k].kind);
                SummaryRow row{spec.noise_levels[l], spec.scalings[f], name, 0.0, 0, 0, 0};
                if (!resolved[f][k]) {
                    row.failed_cells = spec.realisations;
                    result.summary.push_back(row);
                    continue;
                }
                for (std::size_t r = 0; r < reps; ++r) {
                    const auto& cs = cells[l * reps + r][f][k];
                    CellResult base = base_cell(l, r, f, derive_seed(spec.seed, l, r));
                    TrialResult trial = summarise_trial(cs, base, name);
                    ++row.trials;
                    row.successes += trial.success;
                    for (const auto& c : cs) row.failed_cells += c.status != "ok";
                    result.trials.push_back(std::move(trial));
                }
                row.success_rate = row.trials ? static_cast<double>(row.successes) / row.trials : 0.0;
                result.summary.push_back(row);
            }
        }
    }
    // row order of the cell table: level, realisation, scaling, regressor, grid
    for (std::size_t t = 0; t < tasks; ++t)
        for (auto& per_frame : cells[t])
            for (auto& per_reg : per_frame)
                for (auto& c : per_reg) {
                    if (c.status != "ok")
                        result.failures.push_back(c.regressor + " at " + num(c.noise_pct) + "% (" +
                                                  to_string(c.scaling) + "), realisation " +
                                                  std::to_string(c.realisation) + ", value " + num(c.hyper_value) +
                                                  ": " + c.status);
                    result.cells.push_back(std::move(c));
                }

    // STCV is expected to do at least as well as STLSQ; flag where it does not
    for (std::size_t l = 0; l < levels; ++l)
        for (Scaling s : spec.scalings) {
            try {
                const double a = result.rate(spec.noise_levels[l], s, "stcv");
                const double b = result.rate(spec.noise_levels[l], s, "stlsq");
                if (a < b)
                    result.notes.push_back("stcv below stlsq at " + num(spec.noise_levels[l]) + "% (" + to_string(s) +
                                           "): " + num(a) + " < " + num(b));
            } catch (const std::out_of_range&) {
            }
        }
    return result;
}

void write_results_csv(std::ostream& os, const SweepResult& result) {
    os << "system,scaling,noise_pct,regressor,hyper_value,seed,success,n_active_terms,wall_ms,realisation,"
          "secondary_value,status\n";
    for (const auto& c : result.cells) {
        os << result.system << ',' << to_string(c.scaling) << ',' << num(c.noise_pct) << ',' << c.regressor << ','
           << num(c.hyper_value) << ',' << c.seed << ',' << (c.success ? 1 : 0) << ',' << c.n_active << ','
           << num(c.wall_ms) << ',' << c.realisation << ',' << num(c.secondary_value) << ',' << csv_field(c.status)
           << '\n';
    }
}

void write_summary_csv(std::ostream& os, const SweepResult& result) {
    os << "system,scaling,noise_pct,regressor,success_rate,trials,failed_cells\n";
    for (const auto& s : result.summary)
        os << result.system << ',' << to_string(s.scaling) << ',' << num(s.noise_pct) << ',' << s.regressor << ','
           << num(s.success_rate) << ',' << s.trials << ',' << s.failed_cells << '\n';
}

// ---------------------------------------------------------------------------
// sampling grid

void SamplingGridSpec::validate() const {
    std::vector<std::string> problems;
    if (rates.empty()) problems.push_back("rates must not be empty");
    if (durations.empty()) problems.push_back("durations must not be empty");
    for (double r : rates)
        if (!(r > 0.0)) problems.push_back("rate " + num(r) + " must be > 0");
    for (double d : durations)
        if (!(d > 0.0)) problems.push_back("duration " + num(d) + " must be > 0");
    if (realisations < 1) problems.push_back("realisations must be >= 1");
    if (!(noise_pct >= 0.0)) problems.push_back("noise level must be >= 0");
    if (!problems.empty()) {
        std::string msg = "invalid sampling grid:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
}

SamplingGridResult run_sampling_grid(const SamplingGridSpec& spec, const RunOptions& options) {
    spec.validate();
    const OdeSystem system = named_system(spec.system, spec.system_params);
    const SimulationSpec base = spec.simulation ? *spec.simulation : default_simulation(spec.system);
    const std::size_t nr = spec.rates.size(), nd = spec.durations.size();

    SamplingGridResult out;
    out.rates = spec.rates;
    out.durations = spec.durations;
    out.success = Matrix::Constant(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nd), kNaN);
    std::vector<std::string> reasons(nr * nd);

    parallel_for(nr * nd, options.jobs, [&](std::size_t cell) {
        const std::size_t ri = cell / nd, di = cell % nd;
        SimulationSpec sim = base;
        sim.sample_rate = spec.rates[ri];
        sim.duration = spec.durations[di];
        const std::string where = "rate " + num(sim.sample_rate) + " Hz, duration " + num(sim.duration) + " s";
        if (sim.sample_count() < 3) {
            reasons[cell] = where + ": fewer than 3 samples";
            return;
        }
        Trajectory clean;
        std::optional<Frame> frame;
        std::optional<Resolved> res;
        try {
            clean = simulate(system, sim);
            frame = make_frame(system, clean, spec.scaling);
            res = resolve(spec.regressor, *frame);
        } catch (const std::exception& e) {
            reasons[cell] = where + ": " + e.what();
            return;
        }
        int wins = 0;
        for (int r = 0; r < spec.realisations; ++r) {
            const std::uint64_t seed = derive_seed(spec.seed, ri, di, static_cast<std::uint64_t>(r));
            const Trajectory noisy = add_noise(clean, {spec.noise_pct, spec.noise_family, seed});
            CellResult bc;
            bc.noise_pct = spec.noise_pct;
            bc.scaling = spec.scaling;
            bc.realisation = r;
            bc.seed = seed;
            try {
                const Dataset d = make_dataset(noisy, spec.scaling, system, spec.library_degree, spec.include_constant);
                const double lam = spec.regressor.esindy_lambda ? *spec.regressor.esindy_lambda
                                                                : (frame->stlsq_grid.empty() ? 0.0 : frame->stlsq_grid.front());
                const auto cs = run_cells(d, *res, bc, lam, derive_seed(seed, 1), false);
                wins += summarise_trial(cs, bc, res->name).success;
            } catch (const std::exception&) {
            }
        }
        out.success(static_cast<Eigen::Index>(ri), static_cast<Eigen::Index>(di)) =
            static_cast<double>(wins) / spec.realisations;
    });
    for (const auto& r : reasons)
        if (!r.empty()) out.invalid.push_back(r);
    return out;
}

void write_sampling_grid_csv(std::ostream& os, const SamplingGridResult& result) {
    os << "rate_hz,duration_s,success_rate,valid\n";
    for (std::size_t ri = 0; ri < result.rates.size(); ++ri)
        for (std::size_t di = 0; di < result.durations.size(); ++di) {
            const double v = result.success(static_cast<Eigen::Index>(ri), static_cast<Eigen::Index>(di));
            os << num(result.rates[ri]) << ',' << num(result.durations[di]) << ',' << num(v) << ','
               << (std::isnan(v) ? 0 : 1) << '\n';
        }
}

// ---------------------------------------------------------------------------
// bias test

std::string to_string(ModelForm form) {
    switch (form) {
        case ModelForm::linear: return "linear";
        case ModelForm::mixed: return "mixed";
        case ModelForm::nonlinear: return "nonlinear";
        case ModelForm::other: return "other";
    }
    return "?";
}

ModelForm classify_oscillator_model(const CoefficientModel& model) {
    if (!model.terms) throw std::invalid_argument("model carries no term list");
    if (model.support.cols() != 2) throw std::invalid_argument("oscillator models have two equations");
    const auto& terms = *model.terms;
    const auto idx = [&](std::initializer_list<int> e) -> std::optional<Eigen::Index> {
        const std::vector<int> v(e);
        const auto i = term_index(terms, v);
        return i ? std::optional<Eigen::Index>(static_cast<Eigen::Index>(*i)) : std::nullopt;
    };
    const auto s = idx({1, 0}), v = idx({0, 1}), s3 = idx({3, 0});
    if (!s || !v || !s3) throw std::invalid_argument("library lacks the oscillator terms s, v, s^3");

    Mask kinematics = Mask::Constant(model.support.rows(), 1, false);
    kinematics(*v, 0) = true;
    if (!(model.support.col(0) == kinematics.col(0)).all()) return ModelForm::other;

    Mask rest = model.support.col(1);
    if (!rest(*v)) return ModelForm::other;
    const bool lin = rest(*s), cub = rest(*s3);
    rest(*v) = rest(*s) = rest(*s3) = false;
    if (rest.any()) return ModelForm::other;
    if (lin && cub) return ModelForm::mixed;
    if (lin) return ModelForm::linear;
    if (cub) return ModelForm::nonlinear;
    return ModelForm::other;
}

void BiasTestSpec::validate() const {
    std::vector<std::string> problems;
    if (n_points < 2) problems.push_back("n_points must be >= 2");
    if (realisations < 1) problems.push_back("realisations must be >= 1");
    if (!(k1_max >= 0.0) || !(k2_max >= 0.0)) problems.push_back("stiffness maxima must be >= 0");
    if (!(noise_pct >= 0.0)) problems.push_back("noise level must be >= 0");
    if (!(cp_threshold >= 0.0)) problems.push_back("cp_threshold must be >= 0");
    if (n_steps < 1) problems.push_back("n_steps must be >= 1");
    if (!problems.empty()) {
        std::string msg = "invalid bias test:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
}

int count_crossings(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("curves differ in length");
    int crossings = 0, last = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sign == 0) continue;
        if (last != 0 && sign != last) ++crossings;
        last = sign;
    }
    return crossings;
}

BiasTestResult run_bias_test(const BiasTestSpec& spec, const RunOptions& options) {
    spec.validate();
    const auto points = static_cast<std::size_t>(spec.n_points);
    const auto reps = static_cast<std::size_t>(spec.realisations);
    const SimulationSpec sim = spec.simulation ? *spec.simulation : default_simulation("oscillator");

    std::vector<OdeSystem> systems(points);
    std::vector<std::optional<Trajectory>> clean(points);
    BiasTestResult out;
    out.points.resize(points);
    for (std::size_t p = 0; p < points; ++p) {
        const double f = static_cast<double>(p) / static_cast<double>(points - 1);
        out.points[p].k1 = spec.k1_max * (1.0 - f);
        out.points[p].k2 = spec.k2_max * f;
        systems[p] = bias_oscillator(out.points[p].k1, out.points[p].k2);
    }
    parallel_for(points, options.jobs, [&](std::size_t p) {
        try {
            clean[p] = simulate(systems[p], sim);
        } catch (const std::exception&) {
        }
    });

    struct Fit {
        ModelForm form = ModelForm::other;
        double cp_lin = 0.0, cp_cub = 0.0;
        bool ok = false;
    };
    std::vector<Fit> fits(points * reps);
    parallel_for(points * reps, options.jobs, [&](std::size_t t) {
        const std::size_t p = t / reps, r = t % reps;
        if (!clean[p]) return;
        try {
            const Trajectory noisy =
                add_noise(*clean[p], {spec.noise_pct, spec.noise_family, derive_seed(spec.seed, p, r)});
            Trajectory tn = differentiate(normalize(noisy).first);
            DesignMatrix lib = build_polynomial_library(tn.states, spec.library_degree, true);
            StcvSchedule s;
            s.ridge_initial = s.ridge_final = spec.gamma;
            s.cp_final = spec.cp_threshold;
            s.n_steps = spec.n_steps;
            s.stlsq_lambda = spec.stcv_lambda;
            s.cp_scaling = spec.cp_scaling;
            CoefficientModel m = with_terms(stcv(lib.values, *tn.derivs, s), lib);
            Fit fit;
            fit.form = classify_oscillator_model(m);
            const std::vector<int> e_lin{1, 0}, e_cub{3, 0};
            const auto il = term_index(lib, e_lin), ic = term_index(lib, e_cub);
            fit.cp_lin = std::abs((*m.cp)(static_cast<Eigen::Index>(*il), 1));
            fit.cp_cub = std::abs((*m.cp)(static_cast<Eigen::Index>(*ic), 1));
            fit.ok = true;
            fits[t] = fit;
        } catch (const std::exception&) {
        }
    });

    std::vector<double> lin(points), cub(points);
    for (std::size_t p = 0; p < points; ++p) {
        BiasPoint& bp = out.points[p];
        int counts[4] = {0, 0, 0, 0};
        for (std::size_t r = 0; r < reps; ++r) {
            const Fit& f = fits[p * reps + r];
            if (!f.ok) {
                ++bp.failed;
                continue;
            }
            ++bp.trials;
            ++counts[static_cast<int>(f.form)];
            bp.mean_cp_linear += f.cp_lin;
            bp.mean_cp_cubic += f.cp_cub;
        }
        if (bp.trials > 0) {
            const double n = bp.trials;
            bp.rate_linear = counts[0] / n;
            bp.rate_mixed = counts[1] / n;
            bp.rate_nonlinear = counts[2] / n;
            bp.rate_other = counts[3] / n;
            bp.mean_cp_linear /= n;
            bp.mean_cp_cubic /= n;
        }
        lin[p] = bp.mean_cp_linear;
        cub[p] = bp.mean_cp_cubic;
    }
    out.crossings = count_crossings(lin, cub);
    return out;
}

void write_bias_csv(std::ostream& os, const BiasTestResult& result) {
    os << "k1,k2,trials,failed,rate_linear,rate_mixed,rate_nonlinear,rate_other,mean_cp_linear,mean_cp_cubic\n";
    for (const auto& p : result.points)
        os << num(p.k1) << ',' << num(p.k2) << ',' << p.trials << ',' << p.failed << ',' << num(p.rate_linear) << ','
           << num(p.rate_mixed) << ',' << num(p.rate_nonlinear) << ',' << num(p.rate_other) << ','
           << num(p.mean_cp_linear) << ',' << num(p.mean_cp_cubic) << '\n';
}

}  // namespace sindy
