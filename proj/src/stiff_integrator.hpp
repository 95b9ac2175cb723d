#pragma once

// Bridge to the Rosenbrock stepper. Compiled as C++17 because the uBLAS storage shipped with
// Boost 1.74 relies on allocator members removed in C++20, so this header sticks to std types.

#include <functional>
#include <string>
#include <vector>

namespace sindy::detail {

using PlainRhs = std::function<void(double t, const std::vector<double>& x, std::vector<double>& dxdt)>;
using PlainJacobian = std::function<void(double t, const std::vector<double>& x, std::vector<double>& jac_row_major)>;

enum class StepStatus { ok, underflow, non_finite };

/// Advance x from t0 to t1 with controlled Rosenbrock 4(3) steps. dt carries the step proposal
/// between calls; on failure t_reached holds the last accepted time.
StepStatus rosenbrock_advance(const PlainRhs& rhs, const PlainJacobian& jac, std::vector<double>& x,
                              double t0, double t1, double& dt, double abs_tol, double rel_tol,
                              double& t_reached);

}  // namespace sindy::detail
