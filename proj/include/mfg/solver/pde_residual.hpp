#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/hamiltonian/hamiltonian.hpp"
#include "mfg/util/parallel.hpp"

namespace mfg {

struct PdeResidual {
    double hjb = 0.0;
    double fp = 0.0;
};

inline constexpr std::size_t kResidualMargin = 10;

/// Max finite-difference residuals of both equations of the coupled system with (u, m)
/// inserted, over nodes at least `margin` from the boundary and levels 1..Nt-1.
/// Central differences in time and space; the control is phi(t, x, Du) and the measure
/// argument is m itself.
inline PdeResidual pde_residual(const ProblemSpec& problem, const Grid& grid, const ValueField& u,
                                const MeasureFlow& m, std::size_t margin = kResidualMargin,
                                std::optional<PhiEvaluator> evaluator = std::nullopt) {
    if (u.values.levels() != grid.num_levels() || u.values.nodes() != grid.num_nodes() ||
        m.levels() != grid.num_levels() || m.nodes() != grid.num_nodes()) {
        throw InvalidArgument("pde_residual: field shapes do not match the grid");
    }
    const PhiEvaluator ev = evaluator ? *evaluator : default_evaluator(problem);
    const std::size_t nx = grid.nodes_per_dim();
    const std::size_t dim = grid.dim();
    const std::size_t nodes = grid.num_nodes();
    const double dt = grid.dt();
    PdeResidual out;
    if (grid.num_levels() < 3 || nx < 2 * margin + 3) return out;

    auto interior = [&](std::size_t n) {
        for (std::size_t d = 0; d < dim; ++d) {
            const std::size_t i = grid.axis_index(n, d);
            if (i < margin || i + margin >= nx) return false;
        }
        return true;
    };

    std::vector<Vec> du(nodes), bm(nodes), b(nodes);
    std::vector<Mat> a(nodes), am(nodes);
    for (std::size_t k = 1; k + 1 < grid.num_levels(); ++k) {
        const double t = grid.time(k);
        const auto level_u = u.values.level(k);
        const auto level_m = m.level(k);
        const MeasureView view = make_measure_view(grid, level_m);
        compute_gradient(grid, level_u, du);
        parallel_for(0, nodes, [&](std::size_t n) {
            const Vec x = grid.point(n);
            const Vec alpha = minimize_H(problem, ev, t, x, du[n]);
            a[n] = problem.diffusion(t, x, view);
            b[n] = problem.drift(t, x, view, alpha);
            for (int r = 0; r < 2; ++r) {
                bm[n][r] = b[n][r] * level_m[n];
                for (int c = 0; c < 2; ++c) am[n][r][c] = a[n][r][c] * level_m[n];
            }
        });
        double hjb_max = 0.0, fp_max = 0.0;
        for (std::size_t n = 0; n < nodes; ++n) {
            if (!interior(n)) continue;
            const Vec x = grid.point(n);
            const Vec alpha = minimize_H(problem, ev, t, x, du[n]);
            const double f = problem.running_cost(t, x, view, alpha);
            const double ut = (u.values.at(k + 1, n) - u.values.at(k - 1, n)) / (2.0 * dt);
            const double mt = (m.at(k + 1, n) - m.at(k - 1, n)) / (2.0 * dt);
            double second_u = 0.0, second_am = 0.0, div_bm = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const std::size_t s = grid.stride(d);
                const double h = grid.spacing(d);
                second_u += a[n][d][d] * (level_u[n + s] - 2.0 * level_u[n] + level_u[n - s]) / (h * h);
                second_am += (am[n + s][d][d] - 2.0 * am[n][d][d] + am[n - s][d][d]) / (h * h);
                div_bm += (bm[n + s][d] - bm[n - s][d]) / (2.0 * h);
            }
            if (dim == 2) {
                const std::size_t sx = grid.stride(0), sy = grid.stride(1);
                const double denom = 4.0 * grid.spacing(0) * grid.spacing(1);
                const double a12 = 0.5 * (a[n][0][1] + a[n][1][0]);
                const double uxy =
                    (level_u[n + sx + sy] - level_u[n + sx - sy] - level_u[n - sx + sy] + level_u[n - sx - sy]) / denom;
                second_u += 2.0 * a12 * uxy;
                auto c = [&](std::size_t q) { return 0.5 * (am[q][0][1] + am[q][1][0]); };
                second_am += 2.0 * (c(n + sx + sy) - c(n + sx - sy) - c(n - sx + sy) + c(n - sx - sy)) / denom;
            }
            const double r_hjb = ut + dot(du[n], b[n]) + second_u + f;
            const double r_fp = mt - second_am + div_bm;
            hjb_max = std::max(hjb_max, std::abs(r_hjb));
            fp_max = std::max(fp_max, std::abs(r_fp));
        }
        out.hjb = std::max(out.hjb, hjb_max);
        out.fp = std::max(out.fp, fp_max);
    }
    return out;
}

}  // namespace mfg
