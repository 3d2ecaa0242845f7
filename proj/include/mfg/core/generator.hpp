#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfg/core/grid.hpp"
#include "mfg/core/types.hpp"
#include "mfg/util/parallel.hpp"
#include "mfg/util/tridiagonal.hpp"

namespace mfg {

/// Differencing of the first-order drift term.
enum class AdvectionScheme {
    hybrid,  // central where the cell Peclet number |b| h / (2 a) is at most 1, upwind elsewhere
    upwind,  // upwind by the sign of each drift component everywhere
};

/// Drift and diffusion coefficients at every node of a grid for one time step.
struct NodeCoefficients {
    std::array<std::vector<double>, kMaxDim> a;  // a_dd
    std::vector<double> a12;                     // off-diagonal entry (2D only)
    std::array<std::vector<double>, kMaxDim> b;
    bool has_cross = false;

    explicit NodeCoefficients(std::size_t nodes = 0) : a12(nodes, 0.0) {
        for (auto& v : a) v.assign(nodes, 0.0);
        for (auto& v : b) v.assign(nodes, 0.0);
    }

    void set(std::size_t node, const Mat& diff, const Vec& drift, std::size_t dim) noexcept {
        for (std::size_t d = 0; d < dim; ++d) {
            a[d][node] = diff[d][d];
            b[d][node] = drift[d];
        }
        if (dim == 2) a12[node] = 0.5 * (diff[0][1] + diff[1][0]);
    }

    /// Largest dt |b_d| / h_d over the nodes.
    double cfl(const Grid& grid, double dt) const noexcept {
        double m = 0.0;
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            for (double v : b[d]) m = std::max(m, dt * std::abs(v) / grid.spacing(d));
        }
        return m;
    }
};

/// Rows of the one-dimensional generator (A v)_j = a_j v'' + b_j v' along a line of nodes.
///
/// Node j owns the cell of width h centred on it; the outer faces of the end cells carry
/// no flux, so A has zero row sums and its transpose is the conservative Fokker-Planck
/// operator for the same coefficients. Off-diagonals are nonnegative.
inline void assemble_line(std::span<const double> a, std::span<const double> b, double h, AdvectionScheme scheme,
                          Tridiagonal& A) {
    const std::size_t n = a.size();
    A = Tridiagonal(n);
    const double h2 = h * h;
    for (std::size_t j = 0; j < n; ++j) {
        double wp = b[j] > 0.0 ? b[j] : 0.0;
        double wm = b[j] < 0.0 ? b[j] : 0.0;
        if (scheme == AdvectionScheme::hybrid && std::abs(b[j]) * h <= 2.0 * a[j]) wp = wm = 0.5 * b[j];
        if (j + 1 < n) {
            A.upper[j] += a[j] / h2 + wp / h;
            A.diag[j] -= a[j] / h2 + wp / h;
        }
        if (j > 0) {
            A.lower[j] += a[j] / h2 - wm / h;
            A.diag[j] -= a[j] / h2 - wm / h;
        }
    }
}

namespace detail {

inline std::size_t line_count(const Grid& grid) noexcept { return grid.dim() == 1 ? 1 : grid.nodes_per_dim(); }

// Node index of position i on line `line` running along dimension d.
inline std::size_t line_node(const Grid& grid, std::size_t d, std::size_t line, std::size_t i) noexcept {
    if (grid.dim() == 1) return i;
    return d == 0 ? grid.node_index(i, line) : grid.node_index(line, i);
}

}  // namespace detail

/// Solves (I - dt A_d) out = rhs along every grid line in direction d, or with the
/// transpose of A_d when `adjoint` is set. rhs and out may alias.
inline void implicit_line_solve(const Grid& grid, std::size_t d, const NodeCoefficients& c, double dt,
                                AdvectionScheme scheme, bool adjoint, std::span<const double> rhs,
                                std::span<double> out) {
    const std::size_t nx = grid.nodes_per_dim();
    const double h = grid.spacing(d);
    parallel_for(0, detail::line_count(grid), [&](std::size_t line) {
        std::vector<double> la(nx), lb(nx), lr(nx), lx(nx), scratch;
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t node = detail::line_node(grid, d, line, i);
            la[i] = c.a[d][node];
            lb[i] = c.b[d][node];
            lr[i] = rhs[node];
        }
        Tridiagonal A;
        assemble_line(la, lb, h, scheme, A);
        Tridiagonal M(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            M.diag[i] = 1.0 - dt * A.diag[i];
            if (!adjoint) {
                M.lower[i] = -dt * A.lower[i];
                M.upper[i] = -dt * A.upper[i];
            } else {
                M.lower[i] = i > 0 ? -dt * A.upper[i - 1] : 0.0;
                M.upper[i] = i + 1 < nx ? -dt * A.lower[i + 1] : 0.0;
            }
        }
        solve_tridiagonal(M, lr, lx, scratch);
        for (std::size_t i = 0; i < nx; ++i) out[detail::line_node(grid, d, line, i)] = lx[i];
    });
}

/// out += scale * C v (or C^T v when `adjoint`), where C v = 2 a12 d^2 v / dx1 dx2 by the
/// four-point stencil at interior nodes and zero on the boundary.
inline void add_cross_term(const Grid& grid, const NodeCoefficients& c, std::span<const double> v,
                           std::span<double> out, double scale, bool adjoint) {
    if (grid.dim() != 2 || !c.has_cross) return;
    const std::size_t nx = grid.nodes_per_dim();
    const double denom = 4.0 * grid.spacing(0) * grid.spacing(1);
    for (std::size_t j = 1; j + 1 < nx; ++j) {
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const std::size_t n = grid.node_index(i, j);
            const double w = scale * 2.0 * c.a12[n] / denom;
            if (w == 0.0) continue;
            const std::size_t pp = grid.node_index(i + 1, j + 1), pm = grid.node_index(i + 1, j - 1);
            const std::size_t mp = grid.node_index(i - 1, j + 1), mm = grid.node_index(i - 1, j - 1);
            if (!adjoint) {
                out[n] += w * (v[pp] - v[pm] - v[mp] + v[mm]);
            } else {
                out[pp] += w * v[n];
                out[pm] -= w * v[n];
                out[mp] -= w * v[n];
                out[mm] += w * v[n];
            }
        }
    }
}

}  // namespace mfg
