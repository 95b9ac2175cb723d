#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sindy/library.hpp"

namespace sindy {

enum class Integrator {
    adaptive_rk45,   // Dormand-Prince 5(4)
    adaptive_stiff,  // Rosenbrock 4(3) with a finite-difference or analytic Jacobian
};

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct SimulationSpec {
    Vector initial_state;
    double sample_rate = 100.0;  // Hz
    double duration = 10.0;      // s, length of the recorded window
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    Integrator integrator = Integrator::adaptive_rk45;
    /// The system is integrated from t=0 but only recorded on [record_start, record_start+duration].
    double record_start = 0.0;

    /// Number of samples on the inclusive grid: rate * duration + 1.
    std::size_t sample_count() const;
    /// Throws ConfigError when the setup cannot produce at least two samples.
    void validate(std::size_t dim) const;
};

/// One nonzero entry of a system's true coefficient matrix.
struct TruthTerm {
    int equation = 0;
    std::vector<int> exponents;
    double coefficient = 0.0;
};

struct OdeSystem {
    using Rhs = std::function<Vector(double, const Vector&)>;
    using Jacobian = std::function<Matrix(double, const Vector&)>;

    std::string name;
    int dim = 0;
    Rhs rhs;
    Jacobian jacobian;  // optional; finite differences are used when empty
    /// Times at which rhs is discontinuous in t (forcing switches). Integration restarts there.
    std::vector<double> breakpoints;
    /// Nonzero terms of the autonomous model identified from recorded data.
    std::vector<TruthTerm> truth;

    Matrix true_coefficients(const std::vector<TermDescriptor>& terms) const;
    Mask true_support(const std::vector<TermDescriptor>& terms) const;
    std::size_t active_term_count() const { return truth.size(); }
    /// Smallest |coefficient| of the true model; 0 when the model is empty.
    double min_abs_coefficient() const;
    /// Truth expressed in max-abs-scaled coordinates x_n = scales .* x.
    OdeSystem rescaled(const Vector& scales) const;
};

/// Equidistant samples of one run.
struct Trajectory {
    Vector times;
    Matrix states;                 // b x n
    std::optional<Matrix> derivs;  // b x n once differentiated
    std::optional<Vector> scales;  // factors applied by normalisation

    std::size_t rows() const { return static_cast<std::size_t>(states.rows()); }
    std::size_t dims() const { return static_cast<std::size_t>(states.cols()); }
    /// Sample period; requires at least two samples.
    double step() const;
};

// Benchmark systems. State ordering follows the equations: (x, y, z) and (s, v).
OdeSystem lorenz_system();
/// Excitation of 0.5 N/kg for the first 200 us, autonomous afterwards.
OdeSystem bearing_system();
OdeSystem bias_oscillator(double k1, double k2);

enum class CanonicalFamily { rossler, vanderpol, duffing };
CanonicalFamily canonical_family_from_string(const std::string& name);
std::string to_string(CanonicalFamily family);

/// Caller supplies the parameters:
///   rossler   (a, b, c):          x' = -y - z,  y' = x + a*y,  z' = b + x*z - c*z
///   vanderpol (mu):               x' = y,       y' = mu*y - x - mu*x^2*y
///   duffing   (delta, alpha, beta): x' = y,     y' = -delta*y - alpha*x - beta*x^3
OdeSystem canonical_system(CanonicalFamily family, const std::vector<double>& params);

/// Integration setups for the built-in systems (initial value, rate, period, tolerance).
SimulationSpec default_simulation(const std::string& system_name);

/// Integrate the IVP and sample it on the recording grid. Derivatives are left empty.
Trajectory simulate(const OdeSystem& system, const SimulationSpec& spec);

/// Attach derivatives evaluated from the right-hand side at every sample (noise-free reference).
/// Honours traj.scales when the trajectory was normalised.
Trajectory with_exact_derivatives(const OdeSystem& system, const Trajectory& traj);

/// Construct a system by CLI/config name: lorenz, bearing, oscillator, rossler, vanderpol, duffing.
OdeSystem named_system(const std::string& name, const std::vector<double>& params = {});

}  // namespace sindy
