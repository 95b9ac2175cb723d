#include <doctest.h>

#include "oracles.hpp"
#include "sindy/preprocess.hpp"
#include "sindy/regression.hpp"

using namespace sindy;

TEST_CASE("one identity bag reproduces stlsq for every threshold") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = oracle::sparse_problem(seed, 120, 8, 3, 0.5);
        EsindySpec spec;
        spec.n_bags = 1;
        spec.bootstrap = false;
        spec.lambda = 0.4;
        spec.gamma = 1e-12;
        const auto ref = stlsq(p.theta, p.y, spec.lambda, spec.gamma);
        for (double thr : {0.0, 0.3, 1.0}) {
            spec.inclusion_threshold = thr;
            const auto m = esindy(p.theta, p.y, spec);
            CHECK((m.support == ref.support).all());
            CHECK((m.xi - ref.xi).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("fixed seed gives identical bags and supports") {
    const auto p = oracle::sparse_problem(3, 150, 8, 3, 1.0);
    EsindySpec spec;
    spec.n_bags = 30;
    spec.lambda = 0.3;
    spec.seed = 77;
    const auto a = esindy_ensemble(p.theta, p.y, spec);
    const auto b = esindy_ensemble(p.theta, p.y, spec);
    CHECK(a.bag_seeds == b.bag_seeds);
    CHECK(a.inclusion == b.inclusion);
    CHECK(a.median == b.median);
    CHECK((esindy(p.theta, p.y, spec).support == esindy(p.theta, p.y, spec).support).all());
    spec.seed = 78;
    CHECK(esindy_ensemble(p.theta, p.y, spec).bag_seeds != a.bag_seeds);
}

TEST_CASE("zero inclusion threshold keeps the union of bag supports") {
    const auto p = oracle::sparse_problem(4, 100, 8, 3, 2.0);
    EsindySpec spec;
    spec.n_bags = 25;
    spec.lambda = 0.5;
    spec.seed = 1;
    const auto ens = esindy_ensemble(p.theta, p.y, spec);
    const auto m = esindy_select(p.theta, p.y, ens, 0.0, spec.gamma);
    CHECK((m.support == (ens.inclusion.array() > 0.0)).all());
    for (Eigen::Index j = 0; j < ens.inclusion.size(); ++j) {
        const double f = ens.inclusion.data()[j] * spec.n_bags;
        CHECK(f == doctest::Approx(std::round(f)));
    }
}

TEST_CASE("higher inclusion thresholds select nested supports") {
    const auto p = oracle::sparse_problem(5, 100, 8, 3, 2.0);
    EsindySpec spec;
    spec.n_bags = 40;
    spec.lambda = 0.5;
    const auto ens = esindy_ensemble(p.theta, p.y, spec);
    Mask prev = esindy_select(p.theta, p.y, ens, 0.0, spec.gamma).support;
    for (double thr = 0.1; thr <= 1.0; thr += 0.1) {
        const Mask cur = esindy_select(p.theta, p.y, ens, thr, spec.gamma).support;
        CHECK((cur <= prev).all());
        prev = cur;
    }
}

TEST_CASE("100 bags on noise-free Lorenz keep the 7 true terms") {
    const auto sys = lorenz_system();
    const auto traj = differentiate(simulate(sys, default_simulation("lorenz")));
    const auto lib = build_polynomial_library(traj.states, 3, true);
    EsindySpec spec;
    spec.lambda = 0.5;
    spec.inclusion_threshold = 0.9;
    spec.seed = 5;
    const auto m = esindy(lib.values, *traj.derivs, spec);
    CHECK((m.support == sys.true_support(lib.terms)).all());
}

TEST_CASE("E-SINDy parameter validation") {
    EsindySpec spec;
    spec.n_bags = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.n_bags = 5;
    spec.inclusion_threshold = 1.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
