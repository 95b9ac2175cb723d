#include "sindy/regression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "normal_equations.hpp"
#include "sindy/errors.hpp"

namespace sindy {

using detail::active_indices;
using detail::NormalEquations;

std::string to_string(Preconditioning mode) {
    return mode == Preconditioning::identity ? "identity" : "equilibrate";
}

Preconditioned precondition(const Matrix& theta, const Matrix& xdot, Preconditioning mode) {
    Preconditioned out{theta, xdot, {mode, Vector::Ones(theta.cols())}};
    if (mode == Preconditioning::equilibrate) {
        for (Eigen::Index j = 0; j < theta.cols(); ++j) {
            const double peak = theta.col(j).cwiseAbs().maxCoeff();
            if (peak > 0.0 && std::isfinite(peak)) out.record.column_scale(j) = 1.0 / peak;
        }
        out.theta = theta * out.record.column_scale.asDiagonal();
    }
    return out;
}

Vector ridge_solve(const Matrix& theta_active, const Vector& y, double gamma) {
    if (theta_active.cols() < 1) throw std::invalid_argument("ridge_solve needs at least one active column");
    if (!(gamma >= 0.0)) throw std::invalid_argument("ridge penalty must be >= 0");
    if (theta_active.rows() != y.size()) throw std::invalid_argument("ridge_solve: row count mismatch");
    const Matrix gram = theta_active.transpose() * theta_active;
    const Vector rhs = theta_active.transpose() * y;
    return detail::solve_regularised(gram, rhs, gamma);
}

std::string to_string(CpScaling scaling) {
    return scaling == CpScaling::per_sample ? "per_sample" : "sqrt_m";
}

CpScaling cp_scaling_from_string(const std::string& name) {
    if (name == "per_sample") return CpScaling::per_sample;
    if (name == "sqrt_m") return CpScaling::sqrt_m;
    throw std::invalid_argument("unknown CP scaling '" + name + "' (expected per_sample or sqrt_m)");
}

Vector coefficient_presence(const PosteriorStats& stats) {
    const Eigen::Index k = stats.mean.size();
    Vector cp(k);
    const double root_m = std::sqrt(static_cast<double>(std::max<std::size_t>(stats.m, 1)));
    const double factor = stats.scaling == CpScaling::sqrt_m ? root_m : 1.0 / root_m;
    for (Eigen::Index r = 0; r < k; ++r) {
        const double mu = stats.mean(r);
        const double sd = r < stats.std.size() ? stats.std(r) : 0.0;
        if (mu == 0.0) {
            cp(r) = 0.0;
        } else if (stats.floored || !(sd > 0.0) || !std::isfinite(sd)) {
            cp(r) = std::copysign(kCpMax, mu);
        } else {
            cp(r) = std::clamp(factor * mu / sd, -kCpMax, kCpMax);
        }
    }
    return cp;
}

PosteriorStats blr_posterior(const Matrix& theta, const Vector& y, double gamma,
                             const std::vector<bool>& active_mask, CpScaling scaling) {
    if (static_cast<Eigen::Index>(active_mask.size()) != theta.cols())
        throw std::invalid_argument("active mask length does not match library size");
    if (!(gamma >= 0.0)) throw std::invalid_argument("ridge penalty must be >= 0");
    const auto active = active_indices(active_mask);
    if (active.empty()) throw std::invalid_argument("blr_posterior needs at least one active column");
    const Matrix ymat = y;
    NormalEquations ne(theta, ymat, Preconditioning::identity);
    return ne.posterior(active, 0, gamma, scaling);
}

namespace {

std::vector<bool> mask_column(const std::optional<Mask>& m, Eigen::Index q, Eigen::Index eq) {
    std::vector<bool> out(static_cast<std::size_t>(q), true);
    if (m) {
        if (m->rows() != q || m->cols() <= eq) throw std::invalid_argument("initial mask has wrong shape");
        for (Eigen::Index j = 0; j < q; ++j) out[static_cast<std::size_t>(j)] = (*m)(j, eq);
    }
    return out;
}

CoefficientModel empty_model(Eigen::Index q, Eigen::Index n) {
    CoefficientModel model;
    model.xi = Matrix::Zero(q, n);
    model.support = Mask::Constant(q, n, false);
    model.active_history.resize(static_cast<std::size_t>(n));
    return model;
}

void check_inputs(const Matrix& theta, const Matrix& xdot) {
    if (theta.rows() != xdot.rows())
        throw std::invalid_argument("design matrix has " + std::to_string(theta.rows()) +
                                    " rows, derivative data has " + std::to_string(xdot.rows()));
    if (theta.cols() < 1 || xdot.cols() < 1) throw std::invalid_argument("empty regression problem");
}

}  // namespace

CoefficientModel stlsq(const Matrix& theta, const Matrix& xdot, double lambda, double gamma,
                       const std::optional<Mask>& initial_mask, Preconditioning mode) {
    check_inputs(theta, xdot);
    if (!(lambda >= 0.0)) throw std::invalid_argument("STLSQ threshold must be >= 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("ridge penalty must be >= 0");
    const Eigen::Index q = theta.cols(), n = xdot.cols();
    NormalEquations ne(theta, xdot, mode);
    CoefficientModel model = empty_model(q, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto fit = detail::stlsq_equation(ne, i, lambda, gamma, mask_column(initial_mask, q, i));
        model.xi.col(i) = fit.coef;
        for (Eigen::Index j = 0; j < q; ++j) model.support(j, i) = fit.mask[static_cast<std::size_t>(j)];
        model.active_history[static_cast<std::size_t>(i)] = std::move(fit.history);
    }
    model.meta.regressor = "stlsq";
    model.meta.hyperparameters = {{"lambda", lambda}, {"gamma", gamma}};
    if (mode != Preconditioning::identity) model.meta.notes.push_back("precondition=" + to_string(mode));
    if (initial_mask) model.meta.notes.push_back("seeded with an initial support");
    return model;
}

// ---------------------------------------------------------------------------
// STCV

void StcvSchedule::validate() const {
    if (n_steps < 1) throw std::invalid_argument("STCV needs n_steps >= 1");
    if (!(ridge_initial >= 0.0) || !(ridge_final >= 0.0)) throw std::invalid_argument("ridge penalties must be >= 0");
    if (!(cp_initial >= 0.0) || !(cp_final >= 0.0)) throw std::invalid_argument("CP thresholds must be >= 0");
    if (!(stlsq_lambda >= 0.0)) throw std::invalid_argument("STLSQ threshold must be >= 0");
}

double StcvSchedule::ridge_at(int step) const {
    const double f = static_cast<double>(step) / static_cast<double>(n_steps);
    return step >= n_steps ? ridge_final : ridge_initial + (ridge_final - ridge_initial) * f;
}

double StcvSchedule::cp_at(int step) const {
    const double f = static_cast<double>(step) / static_cast<double>(n_steps);
    return step >= n_steps ? cp_final : cp_initial + (cp_final - cp_initial) * f;
}

namespace {

struct StcvEquation {
    std::vector<bool> mask;
    Vector coef;
    Vector cp;
    std::vector<std::size_t> history;
};

// One STLSQ + BLR + CP-elimination pass on the current support.
// Returns the posterior of the STLSQ support, mask updated in place.
PosteriorStats cp_pass(const NormalEquations& ne, Eigen::Index eq, double lambda, double gamma,
                       double cp_threshold, CpScaling scaling, std::vector<bool>& mask,
                       std::vector<std::size_t>& history) {
    auto fit = detail::stlsq_equation(ne, eq, lambda, gamma, mask);
    mask = std::move(fit.mask);
    const auto active = active_indices(mask);
    if (active.empty()) {
        history.push_back(0);
        return {};
    }
    PosteriorStats st = ne.posterior(active, eq, gamma, scaling);
    for (std::size_t r = 0; r < active.size(); ++r)
        if (std::abs(st.cp(static_cast<Eigen::Index>(r))) < cp_threshold) mask[static_cast<std::size_t>(active[r])] = false;
    history.push_back(active_indices(mask).size());
    return st;
}

StcvEquation stcv_equation(const NormalEquations& ne, Eigen::Index eq, const StcvSchedule& s,
                           std::vector<bool> mask) {
    StcvEquation out;
    const auto q = static_cast<std::size_t>(ne.terms());

    cp_pass(ne, eq, s.stlsq_lambda, s.ridge_initial, s.cp_initial, s.cp_scaling, mask, out.history);

    for (int k = 1; k <= s.n_steps; ++k) {
        const double gamma = s.ridge_at(k);
        const double threshold = s.cp_at(k);
        // each pass either shrinks the support or ends the loop, so q + 1 passes suffice
        for (std::size_t pass = 0; pass <= q; ++pass) {
            if (active_indices(mask).empty()) break;
            const std::vector<bool> before = mask;
            cp_pass(ne, eq, s.stlsq_lambda, gamma, threshold, s.cp_scaling, mask, out.history);
            if (mask == before) break;
        }
        if (active_indices(mask).empty()) break;
    }

    out.coef = Vector::Zero(ne.terms());
    out.cp = Vector::Zero(ne.terms());
    const auto active = active_indices(mask);
    if (!active.empty()) {
        const PosteriorStats st = ne.posterior(active, eq, s.ridge_final, s.cp_scaling);
        for (std::size_t r = 0; r < active.size(); ++r) {
            out.coef(active[r]) = st.mean(static_cast<Eigen::Index>(r));
            out.cp(active[r]) = st.cp(static_cast<Eigen::Index>(r));
        }
    }
    out.mask = std::move(mask);
    return out;
}

}  // namespace

CoefficientModel stcv(const Matrix& theta, const Matrix& xdot, const StcvSchedule& schedule) {
    check_inputs(theta, xdot);
    schedule.validate();
    const Eigen::Index q = theta.cols(), n = xdot.cols();
    NormalEquations ne(theta, xdot, schedule.precondition);
    CoefficientModel model = empty_model(q, n);
    model.cp = Matrix::Zero(q, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto eq = stcv_equation(ne, i, schedule, std::vector<bool>(static_cast<std::size_t>(q), true));
        model.xi.col(i) = eq.coef;
        model.cp->col(i) = eq.cp;
        for (Eigen::Index j = 0; j < q; ++j) model.support(j, i) = eq.mask[static_cast<std::size_t>(j)];
        model.active_history[static_cast<std::size_t>(i)] = std::move(eq.history);
    }
    model.meta.regressor = "stcv";
    model.meta.hyperparameters = {{"ridge_initial", schedule.ridge_initial},
                                  {"ridge_final", schedule.ridge_final},
                                  {"cp_initial", schedule.cp_initial},
                                  {"cp_final", schedule.cp_final},
                                  {"n_steps", static_cast<double>(schedule.n_steps)},
                                  {"stlsq_lambda", schedule.stlsq_lambda}};
    model.meta.notes.push_back("posterior evaluated on the currently active columns");
    model.meta.notes.push_back("cp_scaling=" + to_string(schedule.cp_scaling));
    if (schedule.precondition != Preconditioning::identity)
        model.meta.notes.push_back("precondition=" + to_string(schedule.precondition));
    return model;
}

CoefficientModel stcv_stlsq(const Matrix& theta, const Matrix& xdot, const StcvSchedule& schedule,
                            double stlsq_lambda_final, double gamma_final) {
    const CoefficientModel stage1 = stcv(theta, xdot, schedule);
    CoefficientModel model = stlsq(theta, xdot, stlsq_lambda_final, gamma_final, stage1.support,
                                   schedule.precondition);
    model.meta.regressor = "stcv-stlsq";
    model.meta.hyperparameters = stage1.meta.hyperparameters;
    model.meta.hyperparameters["lambda"] = stlsq_lambda_final;
    model.meta.hyperparameters["gamma"] = gamma_final;
    model.meta.notes = {"stage 1 support: " + std::to_string(stage1.active_count()) + " terms"};
    return model;
}

CoefficientModel with_terms(CoefficientModel model, const DesignMatrix& library) {
    if (static_cast<std::size_t>(model.xi.rows()) != library.cols())
        throw std::invalid_argument("model and library have different term counts");
    model.terms = std::make_shared<const std::vector<TermDescriptor>>(library.terms);
    return model;
}

}  // namespace sindy
