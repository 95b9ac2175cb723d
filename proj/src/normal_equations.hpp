#pragma once

// Shared machinery of the regressors: Gram matrix and cross products computed once per
// (theta, xdot, row weights), sub-selected for every active set.

#include <optional>
#include <vector>

#include "sindy/regression.hpp"

namespace sindy::detail {

class NormalEquations {
public:
    /// weights: optional per-row multiplicity (bootstrap counts).
    NormalEquations(const Matrix& theta, const Matrix& xdot, Preconditioning mode,
                    const Vector* weights = nullptr);

    Eigen::Index terms() const { return gram_.rows(); }
    Eigen::Index equations() const { return cross_.cols(); }
    std::size_t samples() const { return samples_; }
    const Vector& column_scale() const { return scale_; }

    /// Coefficients (original space) of active columns of one equation.
    Vector solve(const std::vector<Eigen::Index>& active, Eigen::Index equation, double gamma) const;

    /// Posterior of one equation; residuals are evaluated on the unweighted data.
    PosteriorStats posterior(const std::vector<Eigen::Index>& active, Eigen::Index equation,
                             double gamma, CpScaling scaling = CpScaling::per_sample) const;

private:
    const Matrix& theta_;
    const Matrix& xdot_;
    Matrix gram_;   // preconditioned
    Matrix cross_;  // preconditioned
    Vector scale_;
    std::size_t samples_;
};

std::vector<Eigen::Index> active_indices(const std::vector<bool>& mask);

/// Factor G + gamma I and solve for rhs (a vector or matrix). Throws RankDeficiencyError.
Matrix solve_regularised(const Matrix& gram, const Matrix& rhs, double gamma);

struct EquationFit {
    std::vector<bool> mask;
    Vector coef;  // length q, zero off mask
    std::vector<std::size_t> history;
};

EquationFit stlsq_equation(const NormalEquations& ne, Eigen::Index equation, double lambda,
                           double gamma, std::vector<bool> mask);

}  // namespace sindy::detail
