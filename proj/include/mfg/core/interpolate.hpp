#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "mfg/core/errors.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

namespace detail {

/// Cell index and fractional offset of x along dimension d, clamped to the box.
struct AxisLocation {
    std::size_t cell;
    double frac;
};

inline AxisLocation locate(const Grid& grid, double x, std::size_t d) {
    const std::size_t nx = grid.nodes_per_dim();
    const double lo = grid.x_min(d);
    const double hi = grid.x_max(d);
    const double xc = std::clamp(x, lo, hi);
    const double s = (xc - lo) / grid.spacing(d);
    auto cell = static_cast<std::size_t>(std::floor(s));
    if (cell >= nx - 1) cell = nx - 2;
    double frac = s - static_cast<double>(cell);
    frac = std::clamp(frac, 0.0, 1.0);
    return {cell, frac};
}

template <typename T>
T interpolate_impl(std::span<const T> values, const Grid& grid, const Vec& x) {
    for (std::size_t d = 0; d < grid.dim(); ++d) {
        if (!std::isfinite(x[d])) throw InvalidArgument("interpolation point is not finite");
    }
    const AxisLocation ax = locate(grid, x[0], 0);
    if (grid.dim() == 1) {
        const T& a = values[ax.cell];
        const T& b = values[ax.cell + 1];
        return (1.0 - ax.frac) * a + ax.frac * b;
    }
    const AxisLocation ay = locate(grid, x[1], 1);
    const std::size_t n00 = grid.node_index(ax.cell, ay.cell);
    const std::size_t n10 = n00 + 1;
    const std::size_t n01 = n00 + grid.nodes_per_dim();
    const std::size_t n11 = n01 + 1;
    const double wx = ax.frac;
    const double wy = ay.frac;
    return (1.0 - wy) * ((1.0 - wx) * values[n00] + wx * values[n10]) +
           wy * ((1.0 - wx) * values[n01] + wx * values[n11]);
}

}  // namespace detail

/// Multilinear interpolation of node values at x; points outside the box are clamped to it.
inline double interpolate_field(std::span<const double> values, const Grid& grid, const Vec& x) {
    return detail::interpolate_impl<double>(values, grid, x);
}

/// Multilinear interpolation of a vector-valued node field (e.g. a gradient).
inline Vec interpolate_field(std::span<const Vec> values, const Grid& grid, const Vec& x) {
    return detail::interpolate_impl<Vec>(values, grid, x);
}

}  // namespace mfg
