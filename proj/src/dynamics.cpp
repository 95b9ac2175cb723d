#include "sindy/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include "sindy/errors.hpp"
#include "stiff_integrator.hpp"

namespace sindy {

namespace odeint = boost::numeric::odeint;

std::string to_string(Integrator integrator) {
    return integrator == Integrator::adaptive_rk45 ? "rk45" : "stiff";
}

Integrator integrator_from_string(const std::string& name) {
    if (name == "rk45" || name == "RK45") return Integrator::adaptive_rk45;
    if (name == "stiff" || name == "LSODA" || name == "Radau" || name == "lsoda" || name == "radau")
        return Integrator::adaptive_stiff;
    throw ConfigError("unknown integrator '" + name + "' (expected rk45 or stiff)");
}

std::size_t SimulationSpec::sample_count() const {
    const double intervals = sample_rate * duration;
    if (!(intervals >= 0.0) || !std::isfinite(intervals)) return 0;
    return static_cast<std::size_t>(std::llround(intervals)) + 1;
}

void SimulationSpec::validate(std::size_t dim) const {
    if (static_cast<std::size_t>(initial_state.size()) != dim)
        throw ConfigError("initial state has " + std::to_string(initial_state.size()) +
                          " entries, system has " + std::to_string(dim));
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
        throw ConfigError("sample rate must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be positive");
    if (sample_count() < 2) throw ConfigError("sample_rate * duration must give at least two samples");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ConfigError("integration tolerances must be > 0");
    if (!(record_start >= 0.0)) throw ConfigError("record_start must be >= 0");
}

double Trajectory::step() const {
    if (times.size() < 2) throw DataQualityError("trajectory needs at least two samples for a step");
    return (times(times.size() - 1) - times(0)) / static_cast<double>(times.size() - 1);
}

// ---------------------------------------------------------------------------
// truth handling

Matrix OdeSystem::true_coefficients(const std::vector<TermDescriptor>& terms) const {
    Matrix xi = Matrix::Zero(static_cast<Eigen::Index>(terms.size()), dim);
    for (const auto& t : truth) {
        const auto j = term_index(terms, t.exponents);
        if (!j)
            throw std::invalid_argument("true term " + monomial_label(t.exponents) + " of '" + name +
                                        "' is not in the library");
        xi(static_cast<Eigen::Index>(*j), t.equation) = t.coefficient;
    }
    return xi;
}

Mask OdeSystem::true_support(const std::vector<TermDescriptor>& terms) const {
    return true_coefficients(terms).array() != 0.0;
}

double OdeSystem::min_abs_coefficient() const {
    double out = std::numeric_limits<double>::infinity();
    for (const auto& t : truth) out = std::min(out, std::abs(t.coefficient));
    return truth.empty() ? 0.0 : out;
}

OdeSystem OdeSystem::rescaled(const Vector& scales) const {
    if (scales.size() != dim) throw std::invalid_argument("scale vector does not match system dimension");
    OdeSystem out = *this;
    for (auto& t : out.truth) {
        double factor = scales(t.equation);
        for (std::size_t k = 0; k < t.exponents.size(); ++k)
            factor *= std::pow(scales(static_cast<Eigen::Index>(k)), -t.exponents[k]);
        t.coefficient *= factor;
    }
    out.rhs = [inner = rhs, scales](double t, const Vector& xn) -> Vector {
        const Vector x = xn.cwiseQuotient(scales);
        return inner(t, x).cwiseProduct(scales);
    };
    out.jacobian = nullptr;
    return out;
}

// ---------------------------------------------------------------------------
// systems

namespace {

TruthTerm term(int eq, std::vector<int> ex, double c) { return {eq, std::move(ex), c}; }

void drop_zero_terms(OdeSystem& sys) {
    std::erase_if(sys.truth, [](const TruthTerm& t) { return t.coefficient == 0.0; });
}

}  // namespace

namespace lorenz_params {
constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
}

OdeSystem lorenz_system() {
    using namespace lorenz_params;
    OdeSystem sys;
    sys.name = "lorenz";
    sys.dim = 3;
    sys.rhs = [](double, const Vector& s) -> Vector {
        Vector d(3);
        d << sigma * (s(1) - s(0)), s(0) * (rho - s(2)) - s(1), s(0) * s(1) - beta * s(2);
        return d;
    };
    sys.jacobian = [](double, const Vector& s) -> Matrix {
        Matrix J(3, 3);
        J << -sigma, sigma, 0.0, rho - s(2), -1.0, -s(0), s(1), s(0), -beta;
        return J;
    };
    sys.truth = {
        term(0, {1, 0, 0}, -sigma), term(0, {0, 1, 0}, sigma),
        term(1, {1, 0, 0}, rho),    term(1, {0, 1, 0}, -1.0),  term(1, {1, 0, 1}, -1.0),
        term(2, {0, 0, 1}, -beta),  term(2, {1, 1, 0}, 1.0),
    };
    return sys;
}

namespace bearing_params {
constexpr double stiffness = 1e6, damping = 2e3, amplitude = 0.5, width = 200e-6;
}

OdeSystem bearing_system() {
    using namespace bearing_params;
    OdeSystem sys;
    sys.name = "bearing";
    sys.dim = 2;
    sys.rhs = [](double t, const Vector& s) -> Vector {
        const double force = (t >= 0.0 && t < width) ? amplitude : 0.0;
        Vector d(2);
        d << s(1), -stiffness * s(0) - damping * s(1) + force;
        return d;
    };
    sys.jacobian = [](double, const Vector&) -> Matrix {
        Matrix J(2, 2);
        J << 0.0, 1.0, -stiffness, -damping;
        return J;
    };
    sys.breakpoints = {width};
    sys.truth = {term(0, {0, 1}, 1.0), term(1, {1, 0}, -stiffness), term(1, {0, 1}, -damping)};
    return sys;
}

OdeSystem bias_oscillator(double k1, double k2) {
    if (!(k1 >= 0.0) || !(k2 >= 0.0)) throw std::invalid_argument("oscillator stiffnesses must be >= 0");
    OdeSystem sys;
    sys.name = "oscillator";
    sys.dim = 2;
    static constexpr double damping = 10.0;
    sys.rhs = [k1, k2](double, const Vector& s) -> Vector {
        Vector d(2);
        d << s(1), -damping * s(1) - k1 * s(0) - k2 * s(0) * s(0) * s(0);
        return d;
    };
    sys.jacobian = [k1, k2](double, const Vector& s) -> Matrix {
        Matrix J(2, 2);
        J << 0.0, 1.0, -k1 - 3.0 * k2 * s(0) * s(0), -damping;
        return J;
    };
    sys.truth = {term(0, {0, 1}, 1.0), term(1, {0, 1}, -damping), term(1, {1, 0}, -k1),
                 term(1, {3, 0}, -k2)};
    drop_zero_terms(sys);
    return sys;
}

std::string to_string(CanonicalFamily family) {
    switch (family) {
        case CanonicalFamily::rossler: return "rossler";
        case CanonicalFamily::vanderpol: return "vanderpol";
        case CanonicalFamily::duffing: return "duffing";
    }
    return "?";
}

CanonicalFamily canonical_family_from_string(const std::string& name) {
    if (name == "rossler") return CanonicalFamily::rossler;
    if (name == "vanderpol") return CanonicalFamily::vanderpol;
    if (name == "duffing") return CanonicalFamily::duffing;
    throw ConfigError("unknown canonical system '" + name + "'");
}

OdeSystem canonical_system(CanonicalFamily family, const std::vector<double>& params) {
    const std::size_t expected = family == CanonicalFamily::rossler    ? 3
                                 : family == CanonicalFamily::vanderpol ? 1
                                                                        : 3;
    if (params.size() != expected)
        throw std::invalid_argument(to_string(family) + " expects " + std::to_string(expected) +
                                    " parameters, got " + std::to_string(params.size()));
    for (double p : params)
        if (!std::isfinite(p)) throw std::invalid_argument("non-finite system parameter");

    OdeSystem sys;
    sys.name = to_string(family);
    switch (family) {
        case CanonicalFamily::rossler: {
            const double a = params[0], b = params[1], c = params[2];
            sys.dim = 3;
            sys.rhs = [a, b, c](double, const Vector& s) -> Vector {
                Vector d(3);
                d << -s(1) - s(2), s(0) + a * s(1), b + s(2) * (s(0) - c);
                return d;
            };
            sys.jacobian = [a, c](double, const Vector& s) -> Matrix {
                Matrix J(3, 3);
                J << 0.0, -1.0, -1.0, 1.0, a, 0.0, s(2), 0.0, s(0) - c;
                return J;
            };
            sys.truth = {term(0, {0, 1, 0}, -1.0), term(0, {0, 0, 1}, -1.0), term(1, {1, 0, 0}, 1.0),
                         term(1, {0, 1, 0}, a),    term(2, {0, 0, 0}, b),    term(2, {1, 0, 1}, 1.0),
                         term(2, {0, 0, 1}, -c)};
            break;
        }
        case CanonicalFamily::vanderpol: {
            const double mu = params[0];
            sys.dim = 2;
            sys.rhs = [mu](double, const Vector& s) -> Vector {
                Vector d(2);
                d << s(1), mu * (1.0 - s(0) * s(0)) * s(1) - s(0);
                return d;
            };
            sys.jacobian = [mu](double, const Vector& s) -> Matrix {
                Matrix J(2, 2);
                J << 0.0, 1.0, -2.0 * mu * s(0) * s(1) - 1.0, mu * (1.0 - s(0) * s(0));
                return J;
            };
            sys.truth = {term(0, {0, 1}, 1.0), term(1, {1, 0}, -1.0), term(1, {0, 1}, mu),
                         term(1, {2, 1}, -mu)};
            break;
        }
        case CanonicalFamily::duffing: {
            const double delta = params[0], alpha = params[1], beta = params[2];
            sys.dim = 2;
            sys.rhs = [delta, alpha, beta](double, const Vector& s) -> Vector {
                Vector d(2);
                d << s(1), -delta * s(1) - alpha * s(0) - beta * s(0) * s(0) * s(0);
                return d;
            };
            sys.jacobian = [delta, alpha, beta](double, const Vector& s) -> Matrix {
                Matrix J(2, 2);
                J << 0.0, 1.0, -alpha - 3.0 * beta * s(0) * s(0), -delta;
                return J;
            };
            sys.truth = {term(0, {0, 1}, 1.0), term(1, {0, 1}, -delta), term(1, {1, 0}, -alpha),
                         term(1, {3, 0}, -beta)};
            break;
        }
    }
    drop_zero_terms(sys);
    return sys;
}

OdeSystem named_system(const std::string& name, const std::vector<double>& params) {
    if (name == "lorenz") return lorenz_system();
    if (name == "bearing") return bearing_system();
    if (name == "oscillator") {
        if (params.size() != 2) throw ConfigError("oscillator expects parameters (k1, k2)");
        return bias_oscillator(params[0], params[1]);
    }
    if (name == "rossler" || name == "vanderpol" || name == "duffing") {
        try {
            return canonical_system(canonical_family_from_string(name), params);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    throw ConfigError("unknown system '" + name + "'");
}

SimulationSpec default_simulation(const std::string& system_name) {
    SimulationSpec s;
    auto iv = [](std::initializer_list<double> v) {
        Vector out(static_cast<Eigen::Index>(v.size()));
        Eigen::Index i = 0;
        for (double x : v) out(i++) = x;
        return out;
    };
    if (system_name == "lorenz") {
        s.initial_state = iv({0.0, 1.0, 20.0});
        s.sample_rate = 100.0;
        s.duration = 10.0;
    } else if (system_name == "rossler") {
        s.initial_state = iv({14.0, 8.0, 0.0});
        s.sample_rate = 1000.0;
        s.duration = 10.0;
    } else if (system_name == "vanderpol" || system_name == "duffing") {
        s.initial_state = system_name == "vanderpol" ? iv({2.0, 0.0}) : iv({1.0, 0.0});
        s.sample_rate = 100.0;
        s.duration = system_name == "vanderpol" ? 30.0 : 10.0;
        s.integrator = Integrator::adaptive_stiff;
        // solver defaults
        s.rel_tol = 1e-3;
        s.abs_tol = 1e-6;
    } else if (system_name == "bearing") {
        s.initial_state = iv({0.0, 0.0});
        s.sample_rate = 1e6;
        // 5 ms of free response. A 5 us window would hold 6 samples, fewer than the
        // 10 columns of the cubic library, and the critically damped response lasts milliseconds.
        s.duration = 5e-3;
        s.record_start = 200e-6;
    } else if (system_name == "oscillator") {
        s.initial_state = iv({0.15, 9.89});
        s.sample_rate = 100.0;
        s.duration = 5.0;
    } else {
        throw ConfigError("no default simulation setup for '" + system_name + "'");
    }
    return s;
}

// ---------------------------------------------------------------------------
// integration

namespace {

using std_state = std::vector<double>;

Vector to_eigen(const std_state& x) { return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())); }

// rhs restricted to one continuous piece [a, b): t is clamped so that a forcing switching at b
// is evaluated with its left-hand value.
struct Piece {
    double a, b;
    double clamp(double t) const { return std::clamp(t, a, std::nextafter(b, a)); }
};

Matrix finite_difference_jacobian(const OdeSystem::Rhs& f, double t, const Vector& x) {
    const Eigen::Index n = x.size();
    Matrix J(n, n);
    Vector xp = x, xm = x;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
        xp(k) = x(k) + h;
        xm(k) = x(k) - h;
        J.col(k) = (f(t, xp) - f(t, xm)) / (2.0 * h);
        xp(k) = xm(k) = x(k);
    }
    return J;
}

template <class Stepper, class System, class State>
void advance(Stepper& stepper, System&& sys, State& x, double& t, double t_end, double& dt,
             const std::string& name) {
    const double eps = std::numeric_limits<double>::epsilon();
    while (t < t_end) {
        double h = std::min(dt, t_end - t);
        const bool last = h >= t_end - t;
        const double t_before = t;
        const auto result = stepper.try_step(sys, x, t, h);
        if (result == odeint::success) {
            if (last) t = t_end;
            // keep the controller's proposal unless the step was truncated to hit t_end
            dt = last ? std::max(dt, h) : h;
        } else {
            dt = h;
            t = t_before;
        }
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!std::isfinite(x[i])) throw DivergenceError(name, t, "state became non-finite");
        if (dt < 8.0 * eps * std::max(1.0, std::abs(t)))
            throw DivergenceError(name, t, "step size underflow");
    }
}

}  // namespace

Trajectory with_exact_derivatives(const OdeSystem& system, const Trajectory& traj) {
    if (!system.rhs) throw std::invalid_argument("system '" + system.name + "' has no right-hand side");
    if (traj.states.cols() != system.dim)
        throw std::invalid_argument("trajectory has " + std::to_string(traj.states.cols()) + " columns, system '" +
                                    system.name + "' has " + std::to_string(system.dim));
    Trajectory out = traj;
    Matrix d(traj.states.rows(), traj.states.cols());
    for (Eigen::Index r = 0; r < traj.states.rows(); ++r) {
        Vector x = traj.states.row(r).transpose();
        if (traj.scales) x = x.cwiseQuotient(*traj.scales);
        Vector f = system.rhs(traj.times(r), x);
        if (traj.scales) f = f.cwiseProduct(*traj.scales);
        d.row(r) = f.transpose();
    }
    out.derivs = std::move(d);
    return out;
}

Trajectory simulate(const OdeSystem& system, const SimulationSpec& spec) {
    spec.validate(static_cast<std::size_t>(system.dim));
    if (!system.rhs) throw std::invalid_argument("system '" + system.name + "' has no right-hand side");

    const std::size_t b = spec.sample_count();
    Trajectory traj;
    traj.times.resize(static_cast<Eigen::Index>(b));
    for (std::size_t k = 0; k < b; ++k)
        traj.times(static_cast<Eigen::Index>(k)) = spec.record_start + static_cast<double>(k) / spec.sample_rate;
    traj.states.resize(static_cast<Eigen::Index>(b), system.dim);

    // Stop times: t=0, breakpoints, every recorded sample.
    std::vector<double> stops{0.0};
    for (double bp : system.breakpoints)
        if (bp > 0.0 && bp < traj.times(traj.times.size() - 1)) stops.push_back(bp);
    for (Eigen::Index k = 0; k < traj.times.size(); ++k) stops.push_back(traj.times(k));
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    std::size_t next_sample = 0;
    auto record = [&](double t, const Vector& x) {
        while (next_sample < b && traj.times(static_cast<Eigen::Index>(next_sample)) == t) {
            traj.states.row(static_cast<Eigen::Index>(next_sample++)) = x.transpose();
        }
    };

    const double span = stops.back() - stops.front();
    double dt = span > 0.0 ? std::min(1e-3 * span, 1.0 / spec.sample_rate) : 1.0 / spec.sample_rate;

    if (spec.integrator == Integrator::adaptive_rk45) {
        auto stepper = odeint::make_controlled(spec.abs_tol, spec.rel_tol,
                                               odeint::runge_kutta_dopri5<std_state>());
        std_state x(spec.initial_state.data(), spec.initial_state.data() + spec.initial_state.size());
        record(0.0, spec.initial_state);
        for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
            const Piece piece{stops[i], stops[i + 1]};
            auto sys = [&](const std_state& s, std_state& ds, double t) {
                const Vector d = system.rhs(piece.clamp(t), to_eigen(s));
                for (std::size_t k = 0; k < ds.size(); ++k) ds[k] = d(static_cast<Eigen::Index>(k));
            };
            double t = piece.a;
            // dopri5 caches the last derivative (FSAL); it is stale across a forcing switch
            if (std::find(system.breakpoints.begin(), system.breakpoints.end(), piece.a) !=
                system.breakpoints.end())
                stepper.reset();
            advance(stepper, sys, x, t, piece.b, dt, system.name);
            record(piece.b, to_eigen(x));
        }
    } else {
        std_state x(spec.initial_state.data(), spec.initial_state.data() + spec.initial_state.size());
        record(0.0, spec.initial_state);
        for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
            const Piece piece{stops[i], stops[i + 1]};
            auto f = [&](double t, const std_state& s, std_state& ds) {
                const Vector d = system.rhs(piece.clamp(t), to_eigen(s));
                for (std::size_t k = 0; k < ds.size(); ++k) ds[k] = d(static_cast<Eigen::Index>(k));
            };
            auto jac = [&](double t, const std_state& s, std_state& jr) {
                const double tc = piece.clamp(t);
                const Vector xs = to_eigen(s);
                const Matrix Je = system.jacobian ? system.jacobian(tc, xs)
                                                  : finite_difference_jacobian(system.rhs, tc, xs);
                const Eigen::Index n = Je.rows();
                for (Eigen::Index r = 0; r < n; ++r)
                    for (Eigen::Index c = 0; c < n; ++c) jr[static_cast<std::size_t>(r * n + c)] = Je(r, c);
            };
            double reached = piece.a;
            const auto status = detail::rosenbrock_advance(f, jac, x, piece.a, piece.b, dt, spec.abs_tol,
                                                           spec.rel_tol, reached);
            if (status == detail::StepStatus::underflow)
                throw DivergenceError(system.name, reached, "step size underflow");
            if (status == detail::StepStatus::non_finite)
                throw DivergenceError(system.name, reached, "state became non-finite");
            record(piece.b, to_eigen(x));
        }
    }
    if (next_sample != b) throw std::logic_error("simulate: sampling grid was not fully recorded");
    return traj;
}

}  // namespace sindy
