#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/measure/density.hpp"

namespace mfg {

namespace detail {

// d1 between two discrete measures on the same sorted 1D support with uniform spacing:
// the CDF difference is piecewise constant between nodes.
inline double cdf_gap_integral(std::span<const double> mass1, std::span<const double> mass2, double spacing) {
    double cdf_gap = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < mass1.size(); ++i) {
        cdf_gap += mass1[i] - mass2[i];
        total += std::abs(cdf_gap);
    }
    return total * spacing;
}

/// Node masses of the marginal along dimension d (masses, not densities).
inline std::vector<double> marginal_masses(const Grid& grid, std::span<const double> density, std::size_t d) {
    const std::size_t nx = grid.nodes_per_dim();
    std::vector<double> out(nx, 0.0);
    const double w = grid.cell_volume();
    for (std::size_t n = 0; n < density.size(); ++n) out[grid.axis_index(n, d)] += density[n] * w;
    return out;
}

}  // namespace detail

/// Wasserstein-1 distance between two 1D grid densities, computed as the integral of the
/// absolute difference of their cumulative distributions. Node masses are treated as
/// point masses at the nodes, which makes the result exactly the transport cost.
inline double d1_1d(const Grid& grid, std::span<const double> m1, std::span<const double> m2) {
    if (grid.dim() != 1) throw InvalidArgument("d1_1d needs a one-dimensional grid");
    validate_density(grid, m1);
    validate_density(grid, m2);
    const double h = grid.spacing(0);
    std::vector<double> a(m1.size()), b(m2.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = m1[i] * h;
        b[i] = m2[i] * h;
    }
    return detail::cdf_gap_integral(a, b, h);
}

/// Wasserstein-1 distance between two 1D measures given as (coordinate, mass) pairs,
/// in any order. Total masses must agree within the mass tolerance.
inline double d1_1d(std::span<const double> x1, std::span<const double> w1, std::span<const double> x2,
                    std::span<const double> w2) {
    if (x1.size() != w1.size() || x2.size() != w2.size()) throw InvalidArgument("coordinate/mass length mismatch");
    struct Atom {
        double x;
        double w;  // signed: + from the first measure, - from the second
    };
    std::vector<Atom> atoms;
    atoms.reserve(x1.size() + x2.size());
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < x1.size(); ++i) {
        if (!std::isfinite(x1[i]) || !(w1[i] >= 0.0)) throw InvalidArgument("invalid atom in first measure");
        atoms.push_back({x1[i], w1[i]});
        t1 += w1[i];
    }
    for (std::size_t i = 0; i < x2.size(); ++i) {
        if (!std::isfinite(x2[i]) || !(w2[i] >= 0.0)) throw InvalidArgument("invalid atom in second measure");
        atoms.push_back({x2[i], -w2[i]});
        t2 += w2[i];
    }
    if (std::abs(t1 - 1.0) > kMassTolerance || std::abs(t2 - 1.0) > kMassTolerance) {
        throw InvalidArgument("measures must have unit mass");
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
        return a.x < b.x || (a.x == b.x && a.w < b.w);
    });
    double gap = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
        gap += atoms[i].w;
        total += std::abs(gap) * (atoms[i + 1].x - atoms[i].x);
    }
    return total;
}

/// Distance used to monitor measure flows: d1_1d in 1D, the larger of the two marginal
/// d1 distances in 2D (a lower bound on the true 2D distance).
inline double flow_metric(const Grid& grid, std::span<const double> m1, std::span<const double> m2) {
    if (grid.dim() == 1) return d1_1d(grid, m1, m2);
    validate_density(grid, m1);
    validate_density(grid, m2);
    double best = 0.0;
    for (std::size_t d = 0; d < grid.dim(); ++d) {
        const auto a = detail::marginal_masses(grid, m1, d);
        const auto b = detail::marginal_masses(grid, m2, d);
        best = std::max(best, detail::cdf_gap_integral(a, b, grid.spacing(d)));
    }
    return best;
}

/// rho(a, b) = sup over time levels of flow_metric.
inline double flow_distance(const Grid& grid, const MeasureFlow& a, const MeasureFlow& b) {
    if (a.levels() != b.levels() || a.nodes() != b.nodes()) throw InvalidArgument("flows differ in shape");
    double best = 0.0;
    for (std::size_t k = 0; k < a.levels(); ++k) best = std::max(best, flow_metric(grid, a.level(k), b.level(k)));
    return best;
}

/// Per-level distances between two flows.
inline std::vector<double> flow_distance_profile(const Grid& grid, const MeasureFlow& a, const MeasureFlow& b) {
    if (a.levels() != b.levels() || a.nodes() != b.nodes()) throw InvalidArgument("flows differ in shape");
    std::vector<double> out(a.levels());
    for (std::size_t k = 0; k < a.levels(); ++k) out[k] = flow_metric(grid, a.level(k), b.level(k));
    return out;
}

}  // namespace mfg
