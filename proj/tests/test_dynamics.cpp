#include <doctest.h>

#include <cmath>

#include "sindy/dynamics.hpp"
#include "sindy/errors.hpp"

using namespace sindy;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

void check_close(const Vector& a, const Vector& b, double tol = 1e-12) {
    REQUIRE(a.size() == b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a(i) == doctest::Approx(b(i)).epsilon(tol).scale(1.0));
}

}  // namespace

TEST_CASE("lorenz right-hand side") {
    const auto sys = lorenz_system();
    check_close(sys.rhs(0.0, vec({0, 1, 20})), vec({10, -1, -160.0 / 3.0}));
    check_close(sys.rhs(3.0, vec({0, 0, 0})), vec({0, 0, 0}));
    CHECK(sys.active_term_count() == 7);
    const auto terms = polynomial_terms(3, 3, true);
    CHECK(sys.true_support(terms).count() == 7);
    CHECK(sys.min_abs_coefficient() == doctest::Approx(1.0));
    const Matrix xi = sys.true_coefficients(terms);
    CHECK(xi(*term_index(terms, std::vector<int>{1, 0, 1}), 1) == doctest::Approx(-1.0));
    CHECK(xi(*term_index(terms, std::vector<int>{0, 0, 1}), 2) == doctest::Approx(-8.0 / 3.0));
}

TEST_CASE("bearing forcing window") {
    const auto sys = bearing_system();
    check_close(sys.rhs(0.0, vec({0, 0})), vec({0, 0.5}));
    check_close(sys.rhs(300e-6, vec({0, 0})), vec({0, 0}));
    check_close(sys.rhs(400e-6, vec({1e-6, 0})), vec({0, -1.0}));
    CHECK(sys.breakpoints.size() == 1);
}

TEST_CASE("bias oscillator") {
    const auto sys = bias_oscillator(300, 1000);
    const double s = 0.15, v = 9.89;
    check_close(sys.rhs(0.0, vec({s, v})), vec({9.89, -10 * v - 300 * s - 1000 * s * s * s}));
    CHECK(sys.rhs(0.0, vec({s, v}))(1) == doctest::Approx(-147.275));

    const auto lin = bias_oscillator(300, 0);
    const auto terms = polynomial_terms(2, 3, true);
    CHECK_FALSE(lin.true_support(terms)(*term_index(terms, std::vector<int>{3, 0}), 1));
    CHECK(lin.true_support(terms)(*term_index(terms, std::vector<int>{1, 0}), 1));

    const auto free = bias_oscillator(0, 0);
    check_close(free.rhs(0.0, vec({0, 0})), vec({0, 0}));
    CHECK(free.rhs(0.0, vec({0.3, 0}))(1) == doctest::Approx(0.0));
    CHECK_THROWS_AS(bias_oscillator(-1, 0), std::invalid_argument);
}

TEST_CASE("sample counts use inclusive endpoints") {
    const auto spec = default_simulation("lorenz");
    CHECK(spec.sample_count() == 1001);
    const auto traj = simulate(lorenz_system(), spec);
    CHECK(traj.rows() == 1001);
    CHECK(traj.times(0) == doctest::Approx(0.0));
    CHECK(traj.times(1000) == doctest::Approx(10.0));
    CHECK(traj.step() == doctest::Approx(0.01));
    CHECK_FALSE(traj.derivs);

    auto bearing = default_simulation("bearing");
    bearing.duration = 5e-6;
    const auto short_window = simulate(bearing_system(), bearing);
    CHECK(short_window.rows() == 6);
    CHECK(short_window.times(0) == doctest::Approx(200e-6));
}

TEST_CASE("zero dynamics keep the initial state") {
    const auto sys = canonical_system(CanonicalFamily::duffing, {0, 0, 0});
    CHECK(sys.active_term_count() == 1);
    SimulationSpec spec;
    spec.initial_state = vec({0.7, 0.0});
    spec.duration = 2.0;
    const auto traj = simulate(sys, spec);
    CHECK((traj.states.col(0).array() == 0.7).all());
    CHECK((traj.states.col(1).array() == 0.0).all());
}

TEST_CASE("rk45 and stiff integrators agree with the analytic solution") {
    OdeSystem decay;
    decay.name = "decay";
    decay.dim = 1;
    decay.rhs = [](double, const Vector& x) -> Vector { return -2.0 * x; };
    for (Integrator integ : {Integrator::adaptive_rk45, Integrator::adaptive_stiff}) {
        SimulationSpec spec;
        spec.initial_state = vec({1.5});
        spec.duration = 3.0;
        spec.sample_rate = 10.0;
        spec.integrator = integ;
        spec.rel_tol = spec.abs_tol = 1e-10;
        const auto traj = simulate(decay, spec);
        for (Eigen::Index r = 0; r < traj.states.rows(); ++r)
            CHECK(traj.states(r, 0) == doctest::Approx(1.5 * std::exp(-2.0 * traj.times(r))).epsilon(1e-7));
    }
}

TEST_CASE("stiff integrator matches rk45 on a Duffing run") {
    const auto sys = canonical_system(CanonicalFamily::duffing, {0.1, 1.0, 5.0});
    auto spec = default_simulation("duffing");
    spec.rel_tol = spec.abs_tol = 1e-10;
    spec.duration = 5.0;
    const auto stiff = simulate(sys, spec);
    spec.integrator = Integrator::adaptive_rk45;
    const auto rk = simulate(sys, spec);
    CHECK((stiff.states - rk.states).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("blow-up is reported as a divergence naming the system") {
    OdeSystem blow;
    blow.name = "blowup";
    blow.dim = 1;
    blow.rhs = [](double, const Vector& x) -> Vector { return x.array().square().matrix(); };
    SimulationSpec spec;
    spec.initial_state = vec({1.0});
    spec.duration = 2.0;
    try {
        simulate(blow, spec);
        FAIL("expected a divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.system() == "blowup");
        CHECK(e.t_reached() <= 1.0 + 1e-6);
        CHECK(std::string(e.what()).find("blowup") != std::string::npos);
    }
}

TEST_CASE("simulation spec validation") {
    auto spec = default_simulation("lorenz");
    spec.duration = 0.0;
    CHECK_THROWS_AS(spec.validate(3), ConfigError);
    spec = default_simulation("lorenz");
    CHECK_THROWS_AS(spec.validate(2), ConfigError);
    spec.sample_rate = -1;
    CHECK_THROWS_AS(spec.validate(3), ConfigError);
    CHECK_THROWS_AS(named_system("nope"), ConfigError);
    CHECK_THROWS_AS(named_system("rossler", {1.0}), ConfigError);
    CHECK_THROWS_AS(default_simulation("nope"), ConfigError);
}

TEST_CASE("exact derivatives follow the rhs and the scaling") {
    const auto sys = lorenz_system();
    auto spec = default_simulation("lorenz");
    spec.duration = 1.0;
    auto traj = with_exact_derivatives(sys, simulate(sys, spec));
    REQUIRE(traj.derivs);
    check_close(traj.derivs->row(0).transpose(), vec({10, -1, -160.0 / 3.0}));

    Trajectory scaled = traj;
    const Vector s = vec({0.5, 2.0, 0.1});
    scaled.states = traj.states * s.asDiagonal();
    scaled.scales = s;
    scaled.derivs.reset();
    scaled = with_exact_derivatives(sys, scaled);
    CHECK((*scaled.derivs - *traj.derivs * s.asDiagonal()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rescaled truth maps coefficients into the scaled frame") {
    const auto sys = lorenz_system();
    const Vector s = vec({0.05, 0.04, 0.02});
    const auto r = sys.rescaled(s);
    const Vector x = vec({1.0, -2.0, 30.0});
    const Vector xn = s.cwiseProduct(x);
    check_close(r.rhs(0.0, xn), s.cwiseProduct(sys.rhs(0.0, x)), 1e-12);
    const auto terms = polynomial_terms(3, 3, true);
    const Matrix xi = r.true_coefficients(terms);
    // y' = -x z  ->  yn' = -(s_y / (s_x s_z)) xn zn
    CHECK(xi(*term_index(terms, std::vector<int>{1, 0, 1}), 1) == doctest::Approx(-0.04 / (0.05 * 0.02)));
}
