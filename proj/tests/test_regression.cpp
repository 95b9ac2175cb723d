#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sindy/errors.hpp"
#include "sindy/preprocess.hpp"
#include "sindy/regression.hpp"

using namespace sindy;

namespace {

std::vector<bool> all_active(Eigen::Index q) { return std::vector<bool>(static_cast<std::size_t>(q), true); }

std::vector<bool> mask_col(const Mask& m, Eigen::Index eq) {
    std::vector<bool> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) out[static_cast<std::size_t>(j)] = m(j, eq);
    return out;
}

double max_rel(const Vector& a, const Vector& b) {
    return ((a - b).cwiseAbs().array() / b.cwiseAbs().array().max(1e-300)).maxCoeff();
}

struct LorenzData {
    DesignMatrix lib;
    Matrix xdot;
};

const LorenzData& noise_free_lorenz() {
    static const LorenzData data = [] {
        const auto sys = lorenz_system();
        const auto traj = differentiate(simulate(sys, default_simulation("lorenz")));
        return LorenzData{build_polynomial_library(traj.states, 3, true), *traj.derivs};
    }();
    return data;
}

}  // namespace

TEST_CASE("ridge solve on orthonormal columns returns the projection") {
    Eigen::HouseholderQR<Matrix> qr(Matrix::Random(30, 4));
    const Matrix Q = qr.householderQ() * Matrix::Identity(30, 4);
    const Vector y = Vector::Random(30);
    CHECK(max_rel(ridge_solve(Q, y, 0.0), Q.transpose() * y) < 1e-12);
}

TEST_CASE("ridge solve on a ones column returns the constant") {
    const Vector xi = ridge_solve(Matrix::Ones(12, 1), Vector::Constant(12, 3.25), 0.0);
    CHECK(xi(0) == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("ridge solve matches the SVD formula") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto p = oracle::sparse_problem(seed, 50, 5, 5, 0.1);
        CHECK(max_rel(ridge_solve(p.theta, p.y, 1e-3), oracle::svd_ridge(p.theta, p.y, 1e-3)) < 1e-10);
    }
}

TEST_CASE("singular normal equations at zero ridge") {
    Matrix A(10, 2);
    A.col(0) = Vector::LinSpaced(10, 0, 1);
    A.col(1) = 2.0 * A.col(0);
    const Vector y = Vector::Ones(10);
    try {
        ridge_solve(A, y, 0.0);
        FAIL("expected a rank-deficiency error");
    } catch (const RankDeficiencyError& e) {
        CHECK(std::string(e.what()).find("gamma") != std::string::npos);
    }
    CHECK_NOTHROW(ridge_solve(A, y, 1e-6));
}

TEST_CASE("stlsq with zero threshold is dense least squares") {
    const auto p = oracle::sparse_problem(1, 80, 6, 3, 0.05);
    const auto m = stlsq(p.theta, p.y, 0.0, 0.0);
    CHECK(m.active_count() == 6);
    CHECK(max_rel(m.xi.col(0), oracle::svd_ridge(p.theta, p.y, 0.0)) < 1e-9);
}

TEST_CASE("stlsq with a huge threshold empties the support without error") {
    const auto p = oracle::sparse_problem(2, 80, 6, 3, 0.05);
    const auto m = stlsq(p.theta, p.y, 1e6, 1e-16);
    CHECK(m.active_count() == 0);
    CHECK(m.xi.isZero());
}

TEST_CASE("stlsq invariants: survivors exceed lambda, history shrinks, refit on the support") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = oracle::sparse_problem(seed, 100, 8, 3, 0.3);
        const double lambda = 0.2 + 0.1 * static_cast<double>(seed % 5);
        const auto m = stlsq(p.theta, p.y, lambda, 1e-10);
        for (Eigen::Index j = 0; j < 8; ++j) {
            if (m.support(j, 0))
                CHECK(std::abs(m.xi(j, 0)) >= lambda);
            else
                CHECK(m.xi(j, 0) == 0.0);
        }
        const auto& h = m.active_history[0];
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
        const auto mask = mask_col(m.support, 0);
        if (m.active_count() > 0) {
            const Vector refit = oracle::svd_ridge(oracle::columns(p.theta, mask), p.y, 1e-10);
            CHECK(max_rel(oracle::columns(m.xi.transpose(), mask).transpose().col(0), refit) < 1e-8);
        }
    }
}

TEST_CASE("stlsq on noise-free Lorenz finds the 7-term support") {
    const auto& d = noise_free_lorenz();
    const auto m = stlsq(d.lib.values, d.xdot, 0.5, 1e-16);
    CHECK((m.support == lorenz_system().true_support(d.lib.terms)).all());
}

TEST_CASE("identity preconditioning is bitwise and equilibration is transparent") {
    const auto p = oracle::sparse_problem(3, 60, 5, 3, 0.1);
    const auto id = precondition(p.theta, p.y, Preconditioning::identity);
    CHECK(id.theta == p.theta);
    CHECK(id.record.column_scale.isOnes());

    Matrix theta = p.theta;
    theta.col(1) *= 1e3;
    theta.col(3) *= 1e-2;
    const auto eq = precondition(theta, p.y, Preconditioning::equilibrate);
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(eq.theta.col(j).cwiseAbs().maxCoeff() == doctest::Approx(1.0));

    const auto a = stlsq(theta, p.y, 0.05, 1e-14, std::nullopt, Preconditioning::identity);
    const auto b = stlsq(theta, p.y, 0.05, 1e-14, std::nullopt, Preconditioning::equilibrate);
    CHECK((a.support == b.support).all());
    CHECK((a.xi - b.xi).cwiseAbs().maxCoeff() < 1e-10 * a.xi.cwiseAbs().maxCoeff());
}

TEST_CASE("zero residual floors the noise variance") {
    const auto p = oracle::sparse_problem(4, 40, 4, 4, 0.0);
    const auto st = blr_posterior(p.theta, p.theta * p.xi, 0.0, all_active(4));
    CHECK(st.floored);
    CHECK(st.noise_var == kNoiseVarFloor);
    CHECK(st.std.maxCoeff() < 1e-12);
    for (Eigen::Index r = 0; r < st.cp.size(); ++r) CHECK(std::abs(st.cp(r)) > 1e10);
}

TEST_CASE("posterior std of a mean is the classical standard error") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(1.0, 0.3);
    const Eigen::Index m = 400;
    Vector y(m);
    for (Eigen::Index i = 0; i < m; ++i) y(i) = g(rng);
    const auto st = blr_posterior(Matrix::Ones(m, 1), y, 0.0, all_active(1));
    const double sd = std::sqrt((y.array() - y.mean()).square().sum() / static_cast<double>(m - 1));
    CHECK(st.mean(0) == doctest::Approx(y.mean()).epsilon(1e-12));
    CHECK(st.std(0) == doctest::Approx(sd / std::sqrt(static_cast<double>(m))).epsilon(1e-10));
    CHECK(st.m == static_cast<std::size_t>(m));
}

TEST_CASE("posterior std agrees with a bootstrap of the same regression") {
    const auto p = oracle::sparse_problem(5, 200, 5, 5, 0.01);
    const auto st = blr_posterior(p.theta, p.y, 1e-8, all_active(5));
    const Vector boot = oracle::bootstrap_std(p.theta, p.y, 1e-8, 2000, 17);
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(std::abs(st.std(j) / boot(j) - 1.0) < 0.2);
}

TEST_CASE("coefficient presence formula") {
    PosteriorStats st;
    st.mean = Vector::Constant(1, 2.0);
    st.std = Vector::Constant(1, 1.0);
    st.m = 100;
    st.scaling = CpScaling::sqrt_m;
    CHECK(coefficient_presence(st)(0) == doctest::Approx(20.0));
    st.scaling = CpScaling::per_sample;
    CHECK(coefficient_presence(st)(0) == doctest::Approx(0.2));
    st.mean(0) = 0.0;
    CHECK(coefficient_presence(st)(0) == 0.0);
    st.mean(0) = -3.0;
    st.floored = true;
    CHECK(coefficient_presence(st)(0) == -kCpMax);
}

TEST_CASE("CP is invariant to scaling the regressand") {
    const auto p = oracle::sparse_problem(6, 200, 10, 3, 0.05);
    const auto base = blr_posterior(p.theta, p.y, 1e-12, p.support);
    for (double c : {1e-3, 0.5, 7.0, 1e3}) {
        const auto s = blr_posterior(p.theta, c * p.y, 1e-12, p.support);
        CHECK(max_rel(s.cp, base.cp) < 1e-10);
        CHECK(max_rel(s.mean, c * base.mean) < 1e-10);
    }
}

TEST_CASE("CP is invariant to rescaling a state variable at zero ridge") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix X(200, 2);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
        const auto lib = build_polynomial_library(X, 3, true);
        const auto p = oracle::sparse_problem(100 + static_cast<std::uint64_t>(trial), 200, 10, 3, 0.05);
        const Vector y = lib.values * p.xi + 0.01 * p.theta.col(0);
        const auto base = blr_posterior(lib.values, y, 0.0, p.support);
        for (Eigen::Index col = 0; col < 2; ++col) {
            for (double c : {1e-3, 1e3}) {
                Matrix Xs = X;
                Xs.col(col) *= c;
                const auto s = blr_posterior(build_polynomial_library(Xs, 3, true).values, y, 0.0, p.support);
                CHECK(max_rel(s.cp, base.cp) < 1e-8);
            }
        }
    }
}

TEST_CASE("per-sample CP does not grow with the sample count") {
    const auto p = oracle::sparse_problem(11, 200, 6, 3, 0.2);
    Matrix A2(400, 6);
    A2 << p.theta, p.theta;
    Vector y2(400);
    y2 << p.y, p.y;
    const auto one = blr_posterior(p.theta, p.y, 1e-12, p.support);
    const auto two = blr_posterior(A2, y2, 1e-12, p.support);
    CHECK(max_rel(two.cp, one.cp) < 0.01);
    const auto one_m = blr_posterior(p.theta, p.y, 1e-12, p.support, CpScaling::sqrt_m);
    const auto two_m = blr_posterior(A2, y2, 1e-12, p.support, CpScaling::sqrt_m);
    CHECK(max_rel(two_m.cp, 2.0 * one_m.cp) < 0.01);
}

TEST_CASE("stcv with zero CP thresholds reduces to the initial stlsq fit") {
    const auto p = oracle::sparse_problem(12, 150, 8, 3, 0.1);
    StcvSchedule s;
    s.cp_initial = s.cp_final = 0.0;
    s.stlsq_lambda = 0.05;
    const auto a = stcv(p.theta, p.y, s);
    const auto b = stlsq(p.theta, p.y, 0.05, s.ridge_initial);
    CHECK((a.support == b.support).all());
    CHECK((a.xi - b.xi).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(a.cp);
}

TEST_CASE("stcv recovers a sparse support and reports CP on it") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = oracle::sparse_problem(200 + seed, 200, 8, 3, 0.05);
        StcvSchedule s;
        s.cp_final = 0.3;
        const auto m = stcv(p.theta, p.y, s);
        hits += mask_col(m.support, 0) == p.support ? 1 : 0;
        for (Eigen::Index j = 0; j < 8; ++j)
            if (!m.support(j, 0)) CHECK((*m.cp)(j, 0) == 0.0);
    }
    CHECK(hits >= 19);
}

TEST_CASE("stcv with an unreachable threshold yields an empty model") {
    const auto p = oracle::sparse_problem(13, 100, 5, 2, 0.5);
    StcvSchedule s;
    s.cp_final = 1e20;
    s.cp_initial = 1e20;
    const auto m = stcv(p.theta, p.y, s);
    CHECK(m.active_count() == 0);
    CHECK(m.xi.isZero());
}

TEST_CASE("stcv schedule ramps linearly") {
    StcvSchedule s;
    s.ridge_initial = 1.0;
    s.ridge_final = 3.0;
    s.cp_initial = 0.0;
    s.cp_final = 1.0;
    s.n_steps = 4;
    CHECK(s.ridge_at(0) == 1.0);
    CHECK(s.ridge_at(2) == doctest::Approx(2.0));
    CHECK(s.ridge_at(4) == 3.0);
    CHECK(s.cp_at(1) == doctest::Approx(0.25));
    s.n_steps = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("cascade with zero CP threshold and zero inner lambda is plain stlsq") {
    const auto p = oracle::sparse_problem(14, 150, 8, 3, 0.1);
    StcvSchedule s;
    s.cp_initial = s.cp_final = 0.0;
    s.stlsq_lambda = 0.0;
    const auto a = stcv_stlsq(p.theta, p.y, s, 0.3, 1e-12);
    const auto b = stlsq(p.theta, p.y, 0.3, 1e-12);
    CHECK((a.support == b.support).all());
    CHECK((a.xi - b.xi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cascade skips stage 2 when stage 1 is empty") {
    const auto p = oracle::sparse_problem(15, 100, 5, 2, 0.5);
    StcvSchedule s;
    s.cp_initial = s.cp_final = 1e20;
    const auto m = stcv_stlsq(p.theta, p.y, s, 0.0, 1e-12);
    CHECK(m.active_count() == 0);
}

TEST_CASE("cascade on noise-free Lorenz ends on the true support") {
    const auto& d = noise_free_lorenz();
    StcvSchedule s;
    s.cp_final = 1e-3;
    s.ridge_initial = s.ridge_final = 1e-1;
    const auto stage1 = stcv(d.lib.values, d.xdot, s);
    const Mask truth = lorenz_system().true_support(d.lib.terms);
    REQUIRE((stage1.support || !truth).all());
    const auto m = stcv_stlsq(d.lib.values, d.xdot, s, 0.5, 1e-16);
    CHECK((m.support == truth).all());
}

TEST_CASE("a strong stage-1 ridge never keeps fewer terms than plain STCV on average") {
    const auto sys = canonical_system(CanonicalFamily::duffing, {0.1, 1.0, 5.0});
    const auto clean = simulate(sys, default_simulation("duffing"));
    double plain = 0.0, strong = 0.0;
    const int seeds = 10;
    for (int seed = 0; seed < seeds; ++seed) {
        const auto noisy = add_noise(clean, {1.0, NoiseFamily::gaussian_floor, static_cast<std::uint64_t>(seed)});
        const auto traj = differentiate(normalize(noisy).first);
        const auto lib = build_polynomial_library(traj.states, 3, true);
        StcvSchedule s;
        s.cp_final = 0.05;
        plain += static_cast<double>(stcv(lib.values, *traj.derivs, s).active_count());
        s.ridge_initial = s.ridge_final = 1e2;
        strong += static_cast<double>(stcv(lib.values, *traj.derivs, s).active_count());
    }
    CHECK(strong >= plain);
}
