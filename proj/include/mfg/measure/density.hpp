#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

/// Default tolerance on the unit-mass check of densities handed to measure routines.
inline constexpr double kMassTolerance = 1e-6;

/// Throws unless `density` is a nonnegative unit-mass density on `grid`.
inline void validate_density(const Grid& grid, std::span<const double> density, double tol = kMassTolerance) {
    if (density.size() != grid.num_nodes()) {
        throw InvalidArgument("density has " + std::to_string(density.size()) + " entries, grid has " +
                              std::to_string(grid.num_nodes()) + " nodes");
    }
    for (double v : density) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("density must be finite and nonnegative");
    }
    const double mass = quadrature_mass(grid, density);
    if (std::abs(mass - 1.0) > tol) {
        throw InvalidArgument("density mass " + std::to_string(mass) + " deviates from 1");
    }
}

/// Quadrature of |x|^2 against a density on the grid.
inline double second_moment(const Grid& grid, std::span<const double> density) {
    validate_density(grid, density);
    const double w = grid.cell_volume();
    double s = 0.0;
    for (std::size_t n = 0; n < density.size(); ++n) {
        const Vec x = grid.point(n);
        s += dot(x, x) * density[n] * w;
    }
    return s;
}

/// Second moment of weighted points; independent of the order the pairs are given in
/// up to floating-point summation order.
inline double second_moment(std::span<const Vec> points, std::span<const double> weights) {
    if (points.size() != weights.size()) throw InvalidArgument("points and weights differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += dot(points[i], points[i]) * weights[i];
    return s;
}

/// Mean of a density on the grid.
inline Vec mean(const Grid& grid, std::span<const double> density) {
    return make_measure_view(grid, density).mean;
}

struct Histogram {
    std::vector<double> density;
    std::size_t leaked = 0;      // points outside the box, clamped into the boundary cells
    double leak_fraction = 0.0;  // leaked / total
};

/// Nearest-node cell counting normalized to unit quadrature mass.
inline Histogram histogram_density(std::span<const Vec> points, const Grid& grid) {
    if (points.empty()) throw InvalidArgument("histogram of an empty point set");
    Histogram out;
    out.density.assign(grid.num_nodes(), 0.0);
    const std::size_t nx = grid.nodes_per_dim();
    std::vector<std::size_t> counts(grid.num_nodes(), 0);
    for (const Vec& p : points) {
        bool outside = false;
        std::size_t idx[kMaxDim] = {0, 0};
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            if (!std::isfinite(p[d])) throw InvalidArgument("histogram point is not finite");
            if (p[d] < grid.x_min(d) || p[d] > grid.x_max(d)) outside = true;
            const double s = std::round((p[d] - grid.x_min(d)) / grid.spacing(d));
            idx[d] = s <= 0.0 ? 0 : (s >= static_cast<double>(nx - 1) ? nx - 1 : static_cast<std::size_t>(s));
        }
        if (outside) ++out.leaked;
        ++counts[grid.node_index(idx[0], grid.dim() == 2 ? idx[1] : 0)];
    }
    const double scale = 1.0 / (static_cast<double>(points.size()) * grid.cell_volume());
    for (std::size_t n = 0; n < counts.size(); ++n) out.density[n] = static_cast<double>(counts[n]) * scale;
    out.leak_fraction = static_cast<double>(out.leaked) / static_cast<double>(points.size());
    return out;
}

}  // namespace mfg
