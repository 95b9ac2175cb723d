#include <algorithm>
#include <random>
#include <stdexcept>

#include "normal_equations.hpp"
#include "sindy/preprocess.hpp"
#include "sindy/regression.hpp"

namespace sindy {

void EsindySpec::validate() const {
    if (n_bags < 1) throw std::invalid_argument("E-SINDy needs n_bags >= 1");
    if (!(inclusion_threshold >= 0.0 && inclusion_threshold <= 1.0))
        throw std::invalid_argument("inclusion threshold must lie in [0, 1]");
    if (!(lambda >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("STLSQ hyperparameters must be >= 0");
}

EnsembleFit esindy_ensemble(const Matrix& theta, const Matrix& xdot, const EsindySpec& spec) {
    spec.validate();
    if (theta.rows() != xdot.rows()) throw std::invalid_argument("design matrix and derivatives disagree on rows");
    const Eigen::Index b = theta.rows(), q = theta.cols(), n = xdot.cols();
    const auto bags = static_cast<std::size_t>(spec.n_bags);

    EnsembleFit out;
    out.n_bags = spec.n_bags;
    out.inclusion = Matrix::Zero(q, n);
    std::vector<Matrix> coefs;
    coefs.reserve(bags);

    Vector weights(b);
    for (std::size_t bag = 0; bag < bags; ++bag) {
        const std::uint64_t seed = derive_seed(spec.seed, bag);
        out.bag_seeds.push_back(seed);
        weights.setZero();
        if (spec.bootstrap) {
            std::mt19937_64 rng(seed);
            std::uniform_int_distribution<Eigen::Index> pick(0, b - 1);
            for (Eigen::Index r = 0; r < b; ++r) weights(pick(rng)) += 1.0;
        } else {
            weights.setOnes();
        }
        detail::NormalEquations ne(theta, xdot, Preconditioning::identity, &weights);
        Matrix c = Matrix::Zero(q, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto fit = detail::stlsq_equation(ne, i, spec.lambda, spec.gamma,
                                                    std::vector<bool>(static_cast<std::size_t>(q), true));
            c.col(i) = fit.coef;
        }
        out.inclusion.array() += (c.array() != 0.0).cast<double>();
        coefs.push_back(std::move(c));
    }
    out.inclusion /= static_cast<double>(bags);

    out.median = Matrix::Zero(q, n);
    std::vector<double> column(bags);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < q; ++j) {
            for (std::size_t k = 0; k < bags; ++k) column[k] = coefs[k](j, i);
            std::sort(column.begin(), column.end());
            out.median(j, i) = bags % 2 ? column[bags / 2] : 0.5 * (column[bags / 2 - 1] + column[bags / 2]);
        }
    }
    return out;
}

CoefficientModel esindy_select(const Matrix& theta, const Matrix& xdot, const EnsembleFit& ensemble,
                               double inclusion_threshold, double gamma) {
    if (!(inclusion_threshold >= 0.0 && inclusion_threshold <= 1.0))
        throw std::invalid_argument("inclusion threshold must lie in [0, 1]");
    const Eigen::Index q = theta.cols(), n = xdot.cols();
    if (ensemble.inclusion.rows() != q || ensemble.inclusion.cols() != n)
        throw std::invalid_argument("ensemble does not match the regression problem");

    detail::NormalEquations ne(theta, xdot, Preconditioning::identity);
    CoefficientModel model;
    model.xi = Matrix::Zero(q, n);
    model.support = (ensemble.inclusion.array() >= inclusion_threshold) && (ensemble.inclusion.array() > 0.0);
    model.active_history.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < q; ++j)
            if (model.support(j, i)) active.push_back(j);
        model.active_history[static_cast<std::size_t>(i)] = {active.size()};
        if (active.empty()) continue;
        const Vector c = ne.solve(active, i, gamma);
        for (std::size_t r = 0; r < active.size(); ++r) model.xi(active[r], i) = c(static_cast<Eigen::Index>(r));
    }
    model.meta.regressor = "esindy";
    model.meta.hyperparameters = {{"inclusion_threshold", inclusion_threshold},
                                  {"gamma", gamma},
                                  {"n_bags", static_cast<double>(ensemble.n_bags)}};
    return model;
}

CoefficientModel esindy(const Matrix& theta, const Matrix& xdot, const EsindySpec& spec) {
    const EnsembleFit ensemble = esindy_ensemble(theta, xdot, spec);
    CoefficientModel model = esindy_select(theta, xdot, ensemble, spec.inclusion_threshold, spec.gamma);
    model.meta.hyperparameters["lambda"] = spec.lambda;
    model.meta.seed = spec.seed;
    if (!spec.bootstrap) model.meta.notes.push_back("identity resampling");
    return model;
}

}  // namespace sindy
