#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"

namespace mfg {

/// Coefficients of u(t, x) = a(t) x^2 + d(t) for u_t + u_xx - u_x^2 / 2 = 0, u(T) = c x^2.
/// Substituting the ansatz gives a' = 2 a^2 and d' = -2 a with a(T) = c, d(T) = 0.
struct RiccatiCoefficients {
    double a;
    double d;
};

inline RiccatiCoefficients riccati_closed_form(double c, double horizon, double t) noexcept {
    const double q = 1.0 + 2.0 * c * (horizon - t);
    return {c / q, std::log(q)};
}

namespace detail {

// Classical RK4 for (a, d) backward from T, independent of the closed form.
inline RiccatiCoefficients riccati_rk4(double c, double horizon, double t, std::size_t steps) {
    double a = c, d = 0.0;
    const double h = -(horizon - t) / static_cast<double>(steps);
    auto fa = [](double x) { return 2.0 * x * x; };
    for (std::size_t i = 0; i < steps; ++i) {
        const double ka1 = fa(a), kd1 = -2.0 * a;
        const double a2 = a + 0.5 * h * ka1;
        const double ka2 = fa(a2), kd2 = -2.0 * a2;
        const double a3 = a + 0.5 * h * ka2;
        const double ka3 = fa(a3), kd3 = -2.0 * a3;
        const double a4 = a + h * ka3;
        const double ka4 = fa(a4), kd4 = -2.0 * a4;
        a += h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
        d += h / 6.0 * (kd1 + 2.0 * kd2 + 2.0 * kd3 + kd4);
    }
    return {a, d};
}

}  // namespace detail

/// Throws OracleValidationError unless the closed form matches an RK4 integration of the
/// Riccati system to `tol` at every level of the grid.
inline void validate_riccati(double c, const Grid& grid, double tol = 1e-10) {
    for (std::size_t k = 0; k < grid.num_levels(); ++k) {
        const double t = grid.time(k);
        const auto exact = riccati_closed_form(c, grid.horizon(), t);
        const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2000.0 * (grid.horizon() - t))));
        const auto ode = detail::riccati_rk4(c, grid.horizon(), t, steps);
        const double gap = std::max(std::abs(exact.a - ode.a), std::abs(exact.d - ode.d));
        if (!(gap <= tol)) {
            throw OracleValidationError("Riccati self-check failed at t=" + std::to_string(t) + ": gap " +
                                        std::to_string(gap));
        }
    }
}

/// u(t, x) = a(t) x^2 + d(t) and u_x = 2 a(t) x on a 1D grid, after self-validation.
inline ValueField lq_riccati_value(double c, const Grid& grid) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("Riccati curvature c must be positive");
    if (grid.dim() != 1) throw InvalidArgument("lq_riccati_value needs a one-dimensional grid");
    validate_riccati(c, grid);
    ValueField out(grid);
    for (std::size_t k = 0; k < grid.num_levels(); ++k) {
        const auto r = riccati_closed_form(c, grid.horizon(), grid.time(k));
        for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
            const double x = grid.coordinate(n, 0);
            out.values.at(k, n) = r.a * x * x + r.d;
            out.gradient[k][n] = {2.0 * r.a * x, 0.0};
        }
    }
    return out;
}

}  // namespace mfg
