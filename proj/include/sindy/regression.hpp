#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sindy/library.hpp"

namespace sindy {

/// |CP| assigned to a coefficient whose posterior spread collapsed to the floor.
inline constexpr double kCpMax = 1e15;
/// Absolute floor on the estimated noise variance.
inline constexpr double kNoiseVarFloor = 1e-30;

struct FitMeta {
    std::string regressor;
    std::map<std::string, double> hyperparameters;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> notes;
};

/// Sparse coefficient matrix Xi (q x n) over a shared term list.
struct CoefficientModel {
    Matrix xi;
    Mask support;
    std::shared_ptr<const std::vector<TermDescriptor>> terms;
    FitMeta meta;
    /// Final coefficient presence, zero off support (CP-based regressors only).
    std::optional<Matrix> cp;
    /// Active-term count after each thresholding pass, per equation.
    std::vector<std::vector<std::size_t>> active_history;

    std::size_t active_count() const { return static_cast<std::size_t>(support.count()); }
    std::size_t active_count(Eigen::Index equation) const {
        return static_cast<std::size_t>(support.col(equation).count());
    }
};

enum class Preconditioning {
    identity,
    /// Scale each library column to unit max-abs, solve, and map coefficients back.
    /// Thresholds are always compared in the original coefficient space.
    equilibrate,
};

std::string to_string(Preconditioning mode);

struct PreconditionRecord {
    Preconditioning mode = Preconditioning::identity;
    Vector column_scale;  // theta' = theta * diag(column_scale); xi = column_scale .* xi'
};

struct Preconditioned {
    Matrix theta;
    Matrix xdot;
    PreconditionRecord record;
};

Preconditioned precondition(const Matrix& theta, const Matrix& xdot,
                            Preconditioning mode = Preconditioning::identity);

/// Solve (A^T A + gamma I) xi = A^T y by Cholesky (LU fallback). Throws RankDeficiencyError when
/// gamma == 0 and A^T A is numerically singular, or when the factorisation breaks down.
Vector ridge_solve(const Matrix& theta_active, const Vector& y, double gamma);

/// Normalisation of the coefficient presence mu / sigma by the sample count m.
enum class CpScaling {
    /// mu / (sqrt(m) sigma). The posterior std shrinks like 1/sqrt(m), so this form is
    /// independent of the sample size and thresholds of order 0.001..3 are meaningful.
    per_sample,
    /// sqrt(m) mu / sigma, growing like m for a fixed signal-to-noise ratio.
    sqrt_m,
};

std::string to_string(CpScaling scaling);
CpScaling cp_scaling_from_string(const std::string& name);

/// Closed-form posterior of one equation on the active columns.
struct PosteriorStats {
    std::vector<std::size_t> active;  // library column of each entry below
    Vector mean;
    Vector std;
    Vector cp;
    std::size_t m = 0;
    double noise_var = 0.0;
    /// True when the noise variance hit kNoiseVarFloor.
    bool floored = false;
    CpScaling scaling = CpScaling::per_sample;
};

/// Zero-mean isotropic Gaussian prior with precision proportional to gamma:
/// mean = ridge fit, Sigma = s2 (A^T A + gamma I)^{-1}, s2 = RSS / max(m - k, 1).
PosteriorStats blr_posterior(const Matrix& theta, const Vector& y, double gamma,
                             const std::vector<bool>& active_mask,
                             CpScaling scaling = CpScaling::per_sample);

/// CP = mean / std scaled per stats.scaling; sign(mean) * kCpMax where std collapsed;
/// 0 where mean == 0.
Vector coefficient_presence(const PosteriorStats& stats);

/// Sequential thresholded least squares on every equation. A coefficient with |xi| < lambda is
/// removed; the surviving support is refit with the same gamma.
CoefficientModel stlsq(const Matrix& theta, const Matrix& xdot, double lambda, double gamma,
                       const std::optional<Mask>& initial_mask = std::nullopt,
                       Preconditioning mode = Preconditioning::identity);

struct StcvSchedule {
    double ridge_initial = 1e-16;
    double ridge_final = 1e-16;
    double cp_initial = 0.0;
    double cp_final = 0.3;
    int n_steps = 10;
    /// Magnitude threshold of the STLSQ fits run inside STCV.
    double stlsq_lambda = 0.01;
    Preconditioning precondition = Preconditioning::identity;
    CpScaling cp_scaling = CpScaling::per_sample;

    void validate() const;
    double ridge_at(int step) const;
    double cp_at(int step) const;
};

/// Sequential thresholding of the coefficient of variation: terms are removed when their
/// coefficient presence falls below a linearly ramped threshold.
CoefficientModel stcv(const Matrix& theta, const Matrix& xdot, const StcvSchedule& schedule);

struct EsindySpec {
    int n_bags = 100;
    /// Row bootstrap with replacement; false uses the identity sample for every bag.
    bool bootstrap = true;
    double inclusion_threshold = 0.5;
    double lambda = 0.1;
    double gamma = 1e-16;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-bag STLSQ statistics, reusable across inclusion thresholds.
struct EnsembleFit {
    Matrix inclusion;  // fraction of bags with a nonzero coefficient
    Matrix median;     // bag median of each coefficient (diagnostic)
    int n_bags = 0;
    std::vector<std::uint64_t> bag_seeds;
};

EnsembleFit esindy_ensemble(const Matrix& theta, const Matrix& xdot, const EsindySpec& spec);

/// Keep terms with inclusion >= threshold (and seen in at least one bag), refit on the full data.
CoefficientModel esindy_select(const Matrix& theta, const Matrix& xdot, const EnsembleFit& ensemble,
                               double inclusion_threshold, double gamma);

CoefficientModel esindy(const Matrix& theta, const Matrix& xdot, const EsindySpec& spec);

/// Conservative STCV pass (strong ridge in the schedule) whose support seeds a final STLSQ.
CoefficientModel stcv_stlsq(const Matrix& theta, const Matrix& xdot, const StcvSchedule& schedule,
                            double stlsq_lambda_final, double gamma_final);

/// Attach the library's term list to a model produced from theta.values.
CoefficientModel with_terms(CoefficientModel model, const DesignMatrix& library);

}  // namespace sindy
