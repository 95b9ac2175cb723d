#include "stiff_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint/stepper/rosenbrock4.hpp>
#include <boost/numeric/odeint/stepper/rosenbrock4_controller.hpp>

namespace sindy::detail {

namespace odeint = boost::numeric::odeint;
namespace ublas = boost::numeric::ublas;

StepStatus rosenbrock_advance(const PlainRhs& rhs, const PlainJacobian& jac, std::vector<double>& x,
                              double t0, double t1, double& dt, double abs_tol, double rel_tol,
                              double& t_reached) {
    const std::size_t n = x.size();
    odeint::rosenbrock4_controller<odeint::rosenbrock4<double>> stepper(abs_tol, rel_tol);
    std::vector<double> xs(n), ds(n), jr(n * n);

    auto f = [&](const ublas::vector<double>& s, ublas::vector<double>& d, double t) {
        std::copy(s.begin(), s.end(), xs.begin());
        rhs(t, xs, ds);
        std::copy(ds.begin(), ds.end(), d.begin());
    };
    auto j = [&](const ublas::vector<double>& s, ublas::matrix<double>& J, double t,
                 ublas::vector<double>& dfdt) {
        std::copy(s.begin(), s.end(), xs.begin());
        jac(t, xs, jr);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) J(r, c) = jr[r * n + c];
        // right-hand sides are autonomous within one integration piece
        for (std::size_t k = 0; k < n; ++k) dfdt[k] = 0.0;
    };

    ublas::vector<double> state(n);
    std::copy(x.begin(), x.end(), state.begin());
    const double eps = std::numeric_limits<double>::epsilon();
    double t = t0;
    while (t < t1) {
        double h = std::min(dt, t1 - t);
        const bool last = h >= t1 - t;
        const auto result = stepper.try_step(std::make_pair(f, j), state, t, h);
        if (result == odeint::success) {
            if (last) t = t1;
            dt = last ? std::max(dt, h) : h;
        } else {
            dt = h;
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (!std::isfinite(state[k])) {
                t_reached = t;
                return StepStatus::non_finite;
            }
        }
        if (dt < 8.0 * eps * std::max(1.0, std::abs(t))) {
            t_reached = t;
            return StepStatus::underflow;
        }
    }
    std::copy(state.begin(), state.end(), x.begin());
    t_reached = t;
    return StepStatus::ok;
}

}  // namespace sindy::detail
