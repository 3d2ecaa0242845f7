#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>

#include "mfg/core/errors.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

/// Truncated space-time lattice standing in for [0,T] x R^n.
///
/// Nodes are tensor products of per-dimension uniform axes with the same node count.
/// Node coordinates are computed as x_min + i*h, never by accumulation, so two grids
/// built from identical parameters agree to the last bit.
class Grid {
public:
    Grid() = default;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t nodes_per_dim() const noexcept { return nx_; }
    std::size_t num_nodes() const noexcept { return dim_ == 1 ? nx_ : nx_ * nx_; }
    std::size_t time_steps() const noexcept { return nt_; }
    std::size_t num_levels() const noexcept { return nt_ + 1; }

    double x_min(std::size_t d) const noexcept { return lo_[d]; }
    double x_max(std::size_t d) const noexcept { return hi_[d]; }
    double spacing(std::size_t d) const noexcept { return h_[d]; }
    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return dt_; }

    /// Quadrature weight of a single node: h_1 * ... * h_n.
    double cell_volume() const noexcept { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }

    double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }

    double coordinate(std::size_t i, std::size_t d) const noexcept {
        return lo_[d] + static_cast<double>(i) * h_[d];
    }

    /// Per-dimension index of a flat node index (x fastest).
    std::size_t axis_index(std::size_t node, std::size_t d) const noexcept {
        return d == 0 ? node % nx_ : node / nx_;
    }

    std::size_t node_index(std::size_t i, std::size_t j = 0) const noexcept { return i + nx_ * j; }

    Vec point(std::size_t node) const noexcept {
        Vec p = zero_vec();
        p[0] = coordinate(axis_index(node, 0), 0);
        if (dim_ == 2) p[1] = coordinate(axis_index(node, 1), 1);
        return p;
    }

    /// Stride between consecutive nodes along dimension d in the flat layout.
    std::size_t stride(std::size_t d) const noexcept { return d == 0 ? 1 : nx_; }

    bool contains(const Vec& x) const noexcept {
        for (std::size_t d = 0; d < dim_; ++d) {
            if (x[d] < lo_[d] || x[d] > hi_[d]) return false;
        }
        return true;
    }

    /// Same lattice extended by `pad` nodes on every side of every dimension.
    Grid padded(std::size_t pad) const {
        Grid g = *this;
        g.nx_ = nx_ + 2 * pad;
        for (std::size_t d = 0; d < dim_; ++d) {
            g.lo_[d] = lo_[d] - static_cast<double>(pad) * h_[d];
            g.hi_[d] = hi_[d] + static_cast<double>(pad) * h_[d];
        }
        return g;
    }

    /// FNV-1a digest of the defining parameters; used to tie checkpoints to a grid.
    std::uint64_t hash() const noexcept {
        std::uint64_t state = 1469598103934665603ULL;
        auto mix = [&state](const void* data, std::size_t n) {
            const auto* bytes = static_cast<const unsigned char*>(data);
            for (std::size_t i = 0; i < n; ++i) {
                state ^= bytes[i];
                state *= 1099511628211ULL;
            }
        };
        const std::uint64_t dim = dim_, nx = nx_, nt = nt_;
        mix(&dim, sizeof dim);
        mix(&nx, sizeof nx);
        mix(&nt, sizeof nt);
        for (std::size_t d = 0; d < dim_; ++d) {
            mix(&lo_[d], sizeof(double));
            mix(&hi_[d], sizeof(double));
        }
        mix(&horizon_, sizeof horizon_);
        return state;
    }

    friend bool operator==(const Grid& a, const Grid& b) noexcept {
        return a.dim_ == b.dim_ && a.nx_ == b.nx_ && a.nt_ == b.nt_ && a.lo_ == b.lo_ && a.hi_ == b.hi_ &&
               a.horizon_ == b.horizon_;
    }

    friend Grid build_grid(std::size_t dim, const Vec& x_min, const Vec& x_max, std::size_t nodes_per_dim,
                           double horizon, std::size_t time_steps);

private:
    std::size_t dim_ = 1;
    std::size_t nx_ = 0;
    std::size_t nt_ = 0;
    Vec lo_ = zero_vec();
    Vec hi_ = zero_vec();
    Vec h_ = zero_vec();
    double horizon_ = 0.0;
    double dt_ = 0.0;
};

/// Builds a grid with per-dimension bounds.
inline Grid build_grid(std::size_t dim, const Vec& x_min, const Vec& x_max, std::size_t nodes_per_dim,
                       double horizon, std::size_t time_steps) {
    if (dim < 1 || dim > kMaxDim) throw InvalidArgument("grid dimension must be 1 or 2");
    if (nodes_per_dim < 3) throw InvalidArgument("grid needs at least 3 nodes per dimension");
    if (time_steps < 1) throw InvalidArgument("grid needs at least 1 time step");
    if (!std::isfinite(horizon) || horizon <= 0.0) throw InvalidArgument("horizon must be finite and positive");
    Grid g;
    g.dim_ = dim;
    g.nx_ = nodes_per_dim;
    g.nt_ = time_steps;
    g.horizon_ = horizon;
    g.dt_ = horizon / static_cast<double>(time_steps);
    for (std::size_t d = 0; d < dim; ++d) {
        if (!std::isfinite(x_min[d]) || !std::isfinite(x_max[d])) throw InvalidArgument("grid bounds must be finite");
        if (!(x_min[d] < x_max[d])) throw InvalidArgument("grid requires x_min < x_max");
        g.lo_[d] = x_min[d];
        g.hi_[d] = x_max[d];
        g.h_[d] = (x_max[d] - x_min[d]) / static_cast<double>(nodes_per_dim - 1);
    }
    return g;
}

/// Builds a grid whose every dimension spans [x_min, x_max].
inline Grid build_grid(std::size_t dim, double x_min, double x_max, std::size_t nodes_per_dim, double horizon,
                       std::size_t time_steps) {
    return build_grid(dim, Vec{x_min, x_min}, Vec{x_max, x_max}, nodes_per_dim, horizon, time_steps);
}

}  // namespace mfg
