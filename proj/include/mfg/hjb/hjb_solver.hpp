#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/generator.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/hamiltonian/hamiltonian.hpp"
#include "mfg/util/parallel.hpp"

namespace mfg {

struct HjbSolverConfig {
    enum class Boundary { homogeneous_neumann };
    Boundary boundary = Boundary::homogeneous_neumann;
    std::size_t picard_inner_iters = 2;
    double linear_solver_tol = 1e-10;  // tridiagonal solves are direct; kept for reporting
    AdvectionScheme advection = AdvectionScheme::hybrid;
    // Extra nodes per side of the internal computational box. Unset: about three diffusion
    // lengths, 3 sqrt(2 gamma2 T).
    std::optional<std::size_t> padding_nodes;
    std::optional<PhiEvaluator> evaluator;  // defaults to default_evaluator(problem)
};

struct HjbDiagnostics {
    double max_cfl = 0.0;              // largest dt |b| / h seen
    std::size_t cfl_warnings = 0;      // time steps with dt |b| / h > 1
    std::size_t padding_nodes = 0;
};

/// Padding used when the config leaves it unset.
inline std::size_t default_hjb_padding(const ProblemSpec& problem, const Grid& grid) {
    const double len = 3.0 * std::sqrt(2.0 * problem.constants.gamma2 * grid.horizon());
    double h = grid.spacing(0);
    for (std::size_t d = 1; d < grid.dim(); ++d) h = std::min(h, grid.spacing(d));
    return static_cast<std::size_t>(std::ceil(len / h));
}

namespace detail {

inline void validate_flow_shape(const Grid& grid, const MeasureFlow& flow, const char* what) {
    if (flow.levels() != grid.num_levels() || flow.nodes() != grid.num_nodes()) {
        throw InvalidArgument(std::string(what) + " does not match the grid shape");
    }
}

// Copies the user-grid block out of a padded level.
inline void restrict_level(const Grid& user, const Grid& padded, std::size_t pad, std::span<const double> src,
                           std::span<double> dst) {
    const std::size_t nx = user.nodes_per_dim();
    if (user.dim() == 1) {
        for (std::size_t i = 0; i < nx; ++i) dst[i] = src[i + pad];
        return;
    }
    for (std::size_t j = 0; j < nx; ++j)
        for (std::size_t i = 0; i < nx; ++i) dst[user.node_index(i, j)] = src[padded.node_index(i + pad, j + pad)];
}

}  // namespace detail

/// Backward march for u_t + <Du, b(t,x,mu,phi(Du))> + a_ij u_ij + f = 0, u(T) = g(., mu(T)).
///
/// Each step solves (I - dt A) u_k = u_{k+1} + dt f, where A is the drift-diffusion
/// generator at (t_k, mu(t_k)) with the control lagged at phi(t_k, x, Dv); v starts at
/// u_{k+1} and is replaced by the new iterate on each of the picard_inner_iters sweeps.
/// In 2D the solve is split by direction and the mixed term is explicit. The march runs
/// on a box padded by `padding_nodes` per side and is restricted to `grid` afterwards.
inline ValueField solve_hjb(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& mu_flow,
                            const HjbSolverConfig& config = {}, HjbDiagnostics* diagnostics = nullptr) {
    if (config.picard_inner_iters < 1) throw InvalidArgument("picard_inner_iters must be at least 1");
    if (problem.dim != grid.dim()) throw InvalidArgument("problem and grid dimensions differ");
    detail::validate_flow_shape(grid, mu_flow, "measure flow");
    const PhiEvaluator evaluator = config.evaluator ? *config.evaluator : default_evaluator(problem);
    const std::size_t pad = config.padding_nodes ? *config.padding_nodes : default_hjb_padding(problem, grid);
    const Grid padded = grid.padded(pad);
    const std::size_t nodes = padded.num_nodes();
    const std::size_t dim = grid.dim();
    const double dt = grid.dt();
    const auto views = measure_views(grid, mu_flow);

    ValueField out(grid);
    std::vector<double> next(nodes), cur(nodes), rhs(nodes), f0(nodes), f(nodes);
    std::vector<Vec> grad(nodes), b0(nodes);
    std::vector<Mat> diff(nodes);
    NodeCoefficients coeff(nodes);
    HjbDiagnostics diag;
    diag.padding_nodes = pad;

    const std::size_t last = grid.time_steps();
    parallel_for(0, nodes, [&](std::size_t n) { next[n] = problem.terminal_g(padded.point(n), views[last]); });
    for (std::size_t n = 0; n < nodes; ++n) {
        if (!std::isfinite(next[n])) {
            throw SolverError("terminal cost is not finite at level " + std::to_string(last) + ", node " +
                              std::to_string(n));
        }
    }
    detail::restrict_level(grid, padded, pad, next, out.values.level(last));

    for (std::size_t k = last; k-- > 0;) {
        const double t = grid.time(k);
        const MeasureView& view = views[k];
        parallel_for(0, nodes, [&](std::size_t n) {
            const Vec x = padded.point(n);
            diff[n] = problem.diffusion(t, x, view);
            b0[n] = problem.drift_b0(t, x, view);
            f0[n] = problem.running_f0(t, x, view);
        });
        bool cross = false;
        for (std::size_t n = 0; n < nodes && dim == 2; ++n) cross = cross || diff[n][0][1] != 0.0 || diff[n][1][0] != 0.0;
        coeff.has_cross = cross;

        std::copy(next.begin(), next.end(), cur.begin());
        double step_cfl = 0.0;
        for (std::size_t sweep = 0; sweep < config.picard_inner_iters; ++sweep) {
            compute_gradient(padded, cur, grad);
            parallel_for(0, nodes, [&](std::size_t n) {
                const Vec x = padded.point(n);
                const Vec alpha = minimize_H(problem, evaluator, t, x, grad[n]);
                coeff.set(n, diff[n], b0[n] + problem.drift_b1(t, x, alpha), dim);
                f[n] = f0[n] + problem.running_f1(t, x, alpha);
            });
            for (std::size_t n = 0; n < nodes; ++n) {
                rhs[n] = next[n] + dt * f[n];
            }
            add_cross_term(padded, coeff, next, rhs, dt, false);
            implicit_line_solve(padded, 0, coeff, dt, config.advection, false, rhs, cur);
            if (dim == 2) implicit_line_solve(padded, 1, coeff, dt, config.advection, false, cur, cur);
            step_cfl = std::max(step_cfl, coeff.cfl(padded, dt));
        }
        for (std::size_t n = 0; n < nodes; ++n) {
            if (!std::isfinite(cur[n])) {
                throw SolverError("HJB solution is not finite at level " + std::to_string(k) + ", node " +
                                  std::to_string(n));
            }
        }
        diag.max_cfl = std::max(diag.max_cfl, step_cfl);
        if (step_cfl > 1.0) ++diag.cfl_warnings;
        detail::restrict_level(grid, padded, pad, cur, out.values.level(k));
        std::swap(next, cur);
    }
    recompute_gradient(grid, out);
    if (diagnostics) *diagnostics = diag;
    return out;
}

}  // namespace mfg
