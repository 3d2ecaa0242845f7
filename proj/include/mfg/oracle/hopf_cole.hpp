#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/util/parallel.hpp"

namespace mfg {

using ScalarFn = std::function<double(double)>;

/// Value function of u_t + u_xx - |u_x|^2 / 2 = 0, u(T) = G, through u = -2 ln w with
/// w_t + w_xx = 0:  w(t, x) = int K(T - t, x - y) exp(-G(y) / 2) dy,
/// K(s, z) = (4 pi s)^(-1/2) exp(-z^2 / (4 s)).
///
/// The integral is a trapezoid sum over y on a fixed auxiliary lattice (spacing
/// `spacing`, or a quarter of the kernel width when that is smaller), truncated at nine
/// kernel widths. exp(-G/2) is scaled by its maximum before exponentiation.
class HopfCole {
public:
    HopfCole(ScalarFn G, double horizon, double x_lo, double x_hi, double spacing)
        : G_(std::move(G)), T_(horizon), spacing_(spacing) {
        if (!(horizon > 0.0) || !(spacing > 0.0) || !(x_lo < x_hi)) throw InvalidArgument("HopfCole: bad parameters");
        const double reach = kWidths * std::sqrt(2.0 * horizon);
        y_lo_ = x_lo - reach;
        const auto n = static_cast<std::size_t>(std::ceil((x_hi + reach - y_lo_) / spacing)) + 1;
        g_.resize(n);
        g_min_ = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            g_[j] = G_(y_lo_ + static_cast<double>(j) * spacing);
            if (!std::isfinite(g_[j])) throw InvalidArgument("HopfCole: terminal data is not finite");
            g_min_ = std::min(g_min_, g_[j]);
        }
        e_.resize(n);
        for (std::size_t j = 0; j < n; ++j) e_[j] = std::exp(-0.5 * (g_[j] - g_min_));
    }

    struct Point {
        double u;
        double ux;
    };

    /// u and u_x at (t, x).
    Point operator()(double t, double x) const {
        const double s = T_ - t;
        if (s <= 0.0) {
            const double d = 1e-5 * (1.0 + std::abs(x));
            return {G_(x), (G_(x + d) - G_(x - d)) / (2.0 * d)};
        }
        const double width = std::sqrt(2.0 * s);
        const double reach = kWidths * width;
        double w = 0.0, wx = 0.0;
        if (width >= 4.0 * spacing_) {
            const auto j0 = static_cast<std::ptrdiff_t>(std::floor((x - reach - y_lo_) / spacing_));
            const auto j1 = static_cast<std::ptrdiff_t>(std::ceil((x + reach - y_lo_) / spacing_));
            const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, j0));
            const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(e_.size()) - 1, j1));
            // exp(-z^2 / 4s) along the lattice by the Gaussian recurrence.
            const double z0 = x - (y_lo_ + static_cast<double>(lo) * spacing_);
            double kern = std::exp(-z0 * z0 / (4.0 * s));
            double ratio = std::exp((2.0 * z0 * spacing_ - spacing_ * spacing_) / (4.0 * s));
            const double ratio_step = std::exp(-2.0 * spacing_ * spacing_ / (4.0 * s));
            for (std::size_t j = lo; j <= hi; ++j) {
                const double z = x - (y_lo_ + static_cast<double>(j) * spacing_);
                const double k = kern * e_[j];
                w += k;
                wx -= z / (2.0 * s) * k;
                kern *= ratio;
                ratio *= ratio_step;
            }
            w *= spacing_;
            wx *= spacing_;
        } else {
            // Narrow kernel: sample G directly on a finer local lattice.
            const double dy = width / 4.0;
            const auto n = static_cast<std::ptrdiff_t>(std::ceil(reach / dy));
            for (std::ptrdiff_t j = -n; j <= n; ++j) {
                const double z = -static_cast<double>(j) * dy;
                const double k = std::exp(-z * z / (4.0 * s)) * std::exp(-0.5 * (G_(x - z) - g_min_));
                w += k;
                wx -= z / (2.0 * s) * k;
            }
            w *= dy;
            wx *= dy;
        }
        const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * s);
        w *= norm;
        wx *= norm;
        if (!(w > 0.0) || !std::isfinite(w)) throw OracleValidationError("Hopf-Cole quadrature underflow");
        return {-2.0 * std::log(w) + g_min_, -2.0 * wx / w};
    }

    double horizon() const noexcept { return T_; }

private:
    static constexpr double kWidths = 9.0;
    ScalarFn G_;
    double T_;
    double spacing_;
    double y_lo_ = 0.0;
    double g_min_ = 0.0;
    std::vector<double> g_, e_;
};

/// Checks the substitution numerically: fourth-order differences of the quadrature
/// value must satisfy the PDE to `tol`, and the quadrature gradient must match them.
/// Throws OracleValidationError otherwise.
inline void validate_hopf_cole(const HopfCole& oracle, double x_lo, double x_hi, double tol = 1e-6) {
    const double T = oracle.horizon();
    const double d = 1e-2;
    const double e = 2e-3 * std::min(1.0, T);
    for (double tf : {0.25, 0.5, 0.75}) {
        const double t = tf * T;
        for (int i = 1; i <= 5; ++i) {
            const double x = x_lo + (x_hi - x_lo) * (0.1 + 0.8 * (i - 1) / 4.0);
            auto u = [&](double tt, double xx) { return oracle(tt, xx).u; };
            const double ut = (-u(t + 2 * e, x) + 8 * u(t + e, x) - 8 * u(t - e, x) + u(t - 2 * e, x)) / (12 * e);
            const double ux = (-u(t, x + 2 * d) + 8 * u(t, x + d) - 8 * u(t, x - d) + u(t, x - 2 * d)) / (12 * d);
            const double uxx =
                (-u(t, x + 2 * d) + 16 * u(t, x + d) - 30 * u(t, x) + 16 * u(t, x - d) - u(t, x - 2 * d)) / (12 * d * d);
            const double residual = ut + uxx - 0.5 * ux * ux;
            const double grad_gap = std::abs(oracle(t, x).ux - ux);
            if (!(std::abs(residual) <= tol) || !(grad_gap <= tol)) {
                throw OracleValidationError("Hopf-Cole self-check failed at t=" + std::to_string(t) + ", x=" +
                                            std::to_string(x) + ": residual " + std::to_string(residual) +
                                            ", gradient gap " + std::to_string(grad_gap));
            }
        }
    }
}

/// Hopf-Cole value and gradient at every node of a 1D grid, or of a 2D grid for the
/// separable terminal data G(x1) + G(x2) (u is then the sum of the 1D solutions).
/// Self-validates before filling the field.
inline ValueField hopf_cole_value(const ScalarFn& G, const Grid& grid) {
    const double lo = std::min(grid.x_min(0), grid.dim() == 2 ? grid.x_min(1) : grid.x_min(0));
    const double hi = std::max(grid.x_max(0), grid.dim() == 2 ? grid.x_max(1) : grid.x_max(0));
    double h = grid.spacing(0);
    if (grid.dim() == 2) h = std::min(h, grid.spacing(1));
    const HopfCole oracle(G, grid.horizon(), lo, hi, h / 4.0);
    validate_hopf_cole(oracle, lo, hi);

    const std::size_t nx = grid.nodes_per_dim();
    ValueField out(grid);
    for (std::size_t k = 0; k < grid.num_levels(); ++k) {
        const double t = grid.time(k);
        // 1D profiles per dimension.
        std::vector<HopfCole::Point> prof[2];
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            prof[d].resize(nx);
            parallel_for(0, nx, [&](std::size_t i) { prof[d][i] = oracle(t, grid.coordinate(i, d)); });
        }
        for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
            double u = 0.0;
            Vec g = zero_vec();
            for (std::size_t d = 0; d < grid.dim(); ++d) {
                const auto& p = prof[d][grid.axis_index(n, d)];
                u += p.u;
                g[d] = p.ux;
            }
            out.values.at(k, n) = u;
            out.gradient[k][n] = g;
        }
    }
    return out;
}

}  // namespace mfg
