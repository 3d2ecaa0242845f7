#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

/// Read-only view of one time slice of a measure flow, with cached summary statistics.
///
/// Problem callbacks receive this instead of the full flow so that mean-field couplings
/// through the mean or second moment cost O(1) per evaluation.
struct MeasureView {
    std::span<const double> density;
    const Grid* grid = nullptr;
    Vec mean = zero_vec();
    double second_moment = 0.0;
};

/// Builds a view over `density` (node values on `grid`) and computes its moments.
inline MeasureView make_measure_view(const Grid& grid, std::span<const double> density) {
    MeasureView view;
    view.density = density;
    view.grid = &grid;
    const double w = grid.cell_volume();
    for (std::size_t n = 0; n < density.size(); ++n) {
        const Vec x = grid.point(n);
        const double mass = density[n] * w;
        view.mean = view.mean + mass * x;
        view.second_moment += mass * dot(x, x);
    }
    return view;
}

/// Time-indexed node values on a grid, stored level-major.
class LevelField {
public:
    LevelField() = default;
    LevelField(std::size_t levels, std::size_t nodes, double fill = 0.0)
        : levels_(levels), nodes_(nodes), data_(levels * nodes, fill) {}

    std::size_t levels() const noexcept { return levels_; }
    std::size_t nodes() const noexcept { return nodes_; }

    double& at(std::size_t k, std::size_t node) noexcept { return data_[k * nodes_ + node]; }
    double at(std::size_t k, std::size_t node) const noexcept { return data_[k * nodes_ + node]; }

    std::span<double> level(std::size_t k) noexcept { return {data_.data() + k * nodes_, nodes_}; }
    std::span<const double> level(std::size_t k) const noexcept { return {data_.data() + k * nodes_, nodes_}; }

    std::vector<double>& raw() noexcept { return data_; }
    const std::vector<double>& raw() const noexcept { return data_; }

    friend bool operator==(const LevelField&, const LevelField&) = default;

private:
    std::size_t levels_ = 0;
    std::size_t nodes_ = 0;
    std::vector<double> data_;
};

/// Value function u(t_k, x) and its spatial gradient on a grid.
struct ValueField {
    LevelField values;
    std::vector<std::vector<Vec>> gradient;  // [level][node]

    ValueField() = default;
    explicit ValueField(const Grid& grid)
        : values(grid.num_levels(), grid.num_nodes()),
          gradient(grid.num_levels(), std::vector<Vec>(grid.num_nodes(), zero_vec())) {}
};

/// Densities m(t_k, x) >= 0 with unit quadrature mass at every level.
using MeasureFlow = LevelField;

/// Control value at every (level, node).
using PolicyField = std::vector<std::vector<Vec>>;

/// Finite-difference gradient of node values: central in the interior, second-order
/// one-sided at the boundary (exact on quadratics).
inline void compute_gradient(const Grid& grid, std::span<const double> values, std::span<Vec> out) {
    const std::size_t nx = grid.nodes_per_dim();
    for (std::size_t node = 0; node < values.size(); ++node) {
        Vec g = zero_vec();
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            const std::size_t i = grid.axis_index(node, d);
            const std::size_t s = grid.stride(d);
            const double h = grid.spacing(d);
            if (i == 0) {
                g[d] = (-3.0 * values[node] + 4.0 * values[node + s] - values[node + 2 * s]) / (2.0 * h);
            } else if (i == nx - 1) {
                g[d] = (3.0 * values[node] - 4.0 * values[node - s] + values[node - 2 * s]) / (2.0 * h);
            } else {
                g[d] = (values[node + s] - values[node - s]) / (2.0 * h);
            }
        }
        out[node] = g;
    }
}

/// Fills every gradient level of `field` from its values.
inline void recompute_gradient(const Grid& grid, ValueField& field) {
    for (std::size_t k = 0; k < field.values.levels(); ++k) {
        compute_gradient(grid, field.values.level(k), field.gradient[k]);
    }
}

/// Quadrature mass sum_n m_n h^n of a single level.
inline double quadrature_mass(const Grid& grid, std::span<const double> density) {
    double s = 0.0;
    for (double v : density) s += v;
    return s * grid.cell_volume();
}

/// Throws unless every entry is finite; reports the first offending (level, node).
inline void require_finite(const LevelField& field, const char* what) {
    for (std::size_t k = 0; k < field.levels(); ++k) {
        for (std::size_t n = 0; n < field.nodes(); ++n) {
            if (!std::isfinite(field.at(k, n))) {
                throw SolverError(std::string(what) + ": non-finite value at level " + std::to_string(k) +
                                  ", node " + std::to_string(n));
            }
        }
    }
}

/// Checks the MeasureFlow invariants: nonnegative entries and unit mass within `tol` per level.
inline bool is_valid_flow(const Grid& grid, const MeasureFlow& flow, double tol = 1e-8) {
    if (flow.nodes() != grid.num_nodes() || flow.levels() != grid.num_levels()) return false;
    for (std::size_t k = 0; k < flow.levels(); ++k) {
        for (double v : flow.level(k)) {
            if (!(v >= 0.0) || !std::isfinite(v)) return false;
        }
        if (std::abs(quadrature_mass(grid, flow.level(k)) - 1.0) > tol) return false;
    }
    return true;
}

}  // namespace mfg
