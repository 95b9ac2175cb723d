#include "normal_equations.hpp"

#include <cmath>
#include <limits>

#include "sindy/errors.hpp"

namespace sindy::detail {

namespace {

Vector column_scale_for(const Matrix& theta, Preconditioning mode) {
    Vector d = Vector::Ones(theta.cols());
    if (mode == Preconditioning::equilibrate) {
        for (Eigen::Index j = 0; j < theta.cols(); ++j) {
            const double peak = theta.col(j).cwiseAbs().maxCoeff();
            if (peak > 0.0 && std::isfinite(peak)) d(j) = 1.0 / peak;
        }
    }
    return d;
}

Matrix select(const Matrix& g, const std::vector<Eigen::Index>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix out(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) out(r, c) = g(idx[r], idx[c]);
    return out;
}

Vector select(const Matrix& cross, const std::vector<Eigen::Index>& idx, Eigen::Index col) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Eigen::Index>(r)) = cross(idx[r], col);
    return out;
}

}  // namespace

std::vector<Eigen::Index> active_indices(const std::vector<bool>& mask) {
    std::vector<Eigen::Index> out;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) out.push_back(static_cast<Eigen::Index>(j));
    return out;
}

Matrix solve_regularised(const Matrix& gram, const Matrix& rhs, double gamma) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    Matrix a = gram;
    a.diagonal().array() += gamma;

    // Symmetric Jacobi scaling: the conditioning test then ignores column magnitudes, so
    // rescaling a library column never turns a well-posed problem into a "singular" one.
    Vector d(a.rows());
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        const double v = a(j, j);
        if (!(v > 0.0) || !std::isfinite(v)) {
            if (gamma == 0.0)
                throw RankDeficiencyError("normal equations are singular at gamma = 0; use a ridge penalty > 0");
            d(j) = 1.0;
        } else {
            d(j) = 1.0 / std::sqrt(v);
        }
    }
    const Matrix as = d.asDiagonal() * a * d.asDiagonal();
    const Matrix bs = d.asDiagonal() * rhs;

    Eigen::LLT<Matrix> llt(as);
    if (llt.info() == Eigen::Success) {
        if (gamma == 0.0 && llt.rcond() < eps)
            throw RankDeficiencyError("normal equations are singular at gamma = 0; use a ridge penalty > 0");
        Matrix x = d.asDiagonal() * llt.solve(bs);
        if (x.allFinite()) return x;
    } else if (gamma == 0.0) {
        throw RankDeficiencyError("normal equations are singular at gamma = 0; use a ridge penalty > 0");
    }
    // Not numerically positive definite: same route as a general dense solve.
    Eigen::PartialPivLU<Matrix> lu(as);
    Matrix x = d.asDiagonal() * lu.solve(bs);
    if (!x.allFinite())
        throw RankDeficiencyError("normal equations could not be factorised (gamma = " +
                                  std::to_string(gamma) + ")");
    return x;
}

NormalEquations::NormalEquations(const Matrix& theta, const Matrix& xdot, Preconditioning mode,
                                 const Vector* weights)
    : theta_(theta), xdot_(xdot), scale_(column_scale_for(theta, mode)),
      samples_(static_cast<std::size_t>(theta.rows())) {
    if (theta.rows() != xdot.rows())
        throw std::invalid_argument("design matrix and derivative data have different row counts");
    if (!theta.allFinite() || !xdot.allFinite())
        throw DataQualityError("regression inputs contain non-finite values");
    const Matrix tp = mode == Preconditioning::identity ? theta : Matrix(theta * scale_.asDiagonal());
    if (weights) {
        if (weights->size() != theta.rows()) throw std::invalid_argument("weight vector has wrong length");
        const Matrix tw = tp.array().colwise() * weights->array();
        gram_ = tw.transpose() * tp;
        cross_ = tw.transpose() * xdot;
    } else {
        gram_ = tp.transpose() * tp;
        cross_ = tp.transpose() * xdot;
    }
}

Vector NormalEquations::solve(const std::vector<Eigen::Index>& active, Eigen::Index equation,
                              double gamma) const {
    const Matrix g = select(gram_, active);
    const Vector c = select(cross_, active, equation);
    Vector x = solve_regularised(g, c, gamma);
    for (std::size_t r = 0; r < active.size(); ++r) x(static_cast<Eigen::Index>(r)) *= scale_(active[r]);
    return x;
}

PosteriorStats NormalEquations::posterior(const std::vector<Eigen::Index>& active, Eigen::Index equation,
                                          double gamma, CpScaling scaling) const {
    PosteriorStats st;
    st.scaling = scaling;
    st.active.assign(active.begin(), active.end());
    st.m = samples_;
    const auto k = static_cast<Eigen::Index>(active.size());
    if (k == 0) return st;

    const Matrix g = select(gram_, active);
    const Vector c = select(cross_, active, equation);
    const Vector primed = solve_regularised(g, c, gamma);
    st.mean = primed.cwiseProduct(Vector(select(Matrix(scale_), active, 0)));

    Vector resid = xdot_.col(equation);
    for (Eigen::Index r = 0; r < k; ++r) resid.noalias() -= st.mean(r) * theta_.col(active[static_cast<std::size_t>(r)]);
    const double rss = resid.squaredNorm();
    const double dof = std::max<double>(static_cast<double>(samples_) - static_cast<double>(k), 1.0);
    st.noise_var = rss / dof;
    if (!(st.noise_var > kNoiseVarFloor)) {
        st.noise_var = kNoiseVarFloor;
        st.floored = true;
    }

    const Matrix inv = solve_regularised(g, Matrix::Identity(k, k), gamma);
    st.std.resize(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const double v = std::max(inv(r, r), 0.0) * st.noise_var;
        st.std(r) = std::sqrt(v) * scale_(active[static_cast<std::size_t>(r)]);
    }
    st.cp = coefficient_presence(st);
    return st;
}

EquationFit stlsq_equation(const NormalEquations& ne, Eigen::Index equation, double lambda, double gamma,
                           std::vector<bool> mask) {
    EquationFit fit;
    fit.coef = Vector::Zero(ne.terms());
    for (;;) {
        const auto active = active_indices(mask);
        fit.history.push_back(active.size());
        if (active.empty()) break;
        const Vector c = ne.solve(active, equation, gamma);
        bool changed = false;
        for (std::size_t r = 0; r < active.size(); ++r) {
            if (std::abs(c(static_cast<Eigen::Index>(r))) < lambda) {
                mask[static_cast<std::size_t>(active[r])] = false;
                changed = true;
            }
        }
        if (!changed) {
            for (std::size_t r = 0; r < active.size(); ++r) fit.coef(active[r]) = c(static_cast<Eigen::Index>(r));
            break;
        }
    }
    fit.mask = std::move(mask);
    return fit;
}

}  // namespace sindy::detail
