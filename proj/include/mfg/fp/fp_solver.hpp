#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/generator.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/util/parallel.hpp"

namespace mfg {

struct FpSolverConfig {
    enum class FluxScheme { upwind_conservative };
    enum class Boundary { zero_flux };
    FluxScheme flux_scheme = FluxScheme::upwind_conservative;
    Boundary boundary = Boundary::zero_flux;
    bool renormalize_each_step = true;
    AdvectionScheme advection = AdvectionScheme::hybrid;
    // Evaluate a and b at the density being computed instead of the frozen flow, with this
    // many fixed-point sweeps per step.
    bool self_coupled = false;
    std::size_t self_coupled_sweeps = 1;
    double negative_tolerance = 1e-12;
    double mass_drift_tolerance = 1e-6;
};

struct FpDiagnostics {
    double max_mass_drift = 0.0;     // largest |mass - previous mass| before renormalization
    double min_density = 0.0;        // most negative value seen before clipping
    std::size_t clipped_nodes = 0;
    std::vector<double> mass_drift;  // per step
};

namespace detail {

// One implicit step of the adjoint scheme: m_next solves (I - dt A^T) m_next = m (+ mixed term).
inline void fp_step(const Grid& grid, const NodeCoefficients& coeff, double dt, AdvectionScheme scheme,
                    std::span<const double> m, std::span<double> m_next) {
    std::vector<double> rhs(m.begin(), m.end());
    add_cross_term(grid, coeff, m, rhs, dt, true);
    if (grid.dim() == 2) {
        implicit_line_solve(grid, 1, coeff, dt, scheme, true, rhs, rhs);
    }
    implicit_line_solve(grid, 0, coeff, dt, scheme, true, rhs, m_next);
}

}  // namespace detail

/// Forward march for m_t - d_ij(a_ij m) + d_i(b_i m) = 0, m(0) = m0, in divergence form.
///
/// Step k -> k+1 uses coefficients at (t_k, mu(t_k), policy[k]) and the transpose of the
/// backward generator used by solve_hjb, so mass is conserved and densities stay
/// nonnegative. policy may be empty for problems whose drift ignores the control.
inline MeasureFlow solve_fp(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& mu_flow,
                            const PolicyField& policy, const FpSolverConfig& config = {},
                            FpDiagnostics* diagnostics = nullptr) {
    if (problem.dim != grid.dim()) throw InvalidArgument("problem and grid dimensions differ");
    if (mu_flow.levels() != grid.num_levels() || mu_flow.nodes() != grid.num_nodes()) {
        throw InvalidArgument("measure flow does not match the grid shape");
    }
    const bool has_policy = !policy.empty();
    if (has_policy) {
        if (policy.size() < grid.time_steps()) throw InvalidArgument("policy has too few time levels");
        for (std::size_t k = 0; k < grid.time_steps(); ++k) {
            if (policy[k].size() != grid.num_nodes()) throw InvalidArgument("policy level has the wrong size");
            for (const Vec& a : policy[k]) {
                if (!all_finite(a)) throw InvalidArgument("policy is not finite at level " + std::to_string(k));
            }
        }
    }
    if (config.self_coupled && config.self_coupled_sweeps < 1) throw InvalidArgument("self_coupled_sweeps must be >= 1");

    const std::size_t nodes = grid.num_nodes();
    const std::size_t dim = grid.dim();
    const double dt = grid.dt();
    const auto views = measure_views(grid, mu_flow);

    MeasureFlow m(grid.num_levels(), nodes);
    {
        const auto m0 = discretize_initial_density(problem, grid);
        std::copy(m0.begin(), m0.end(), m.level(0).begin());
    }
    FpDiagnostics diag;
    NodeCoefficients coeff(nodes);
    std::vector<double> next(nodes);

    auto assemble = [&](std::size_t k, const MeasureView& view) {
        const double t = grid.time(k);
        parallel_for(0, nodes, [&](std::size_t n) {
            const Vec x = grid.point(n);
            const Vec alpha = has_policy ? policy[k][n] : zero_vec();
            coeff.set(n, problem.diffusion(t, x, view), problem.drift(t, x, view, alpha), dim);
        });
        bool cross = false;
        for (std::size_t n = 0; n < nodes && dim == 2; ++n) cross = cross || coeff.a12[n] != 0.0;
        coeff.has_cross = cross;
    };

    for (std::size_t k = 0; k < grid.time_steps(); ++k) {
        const auto cur = m.level(k);
        if (!config.self_coupled) {
            assemble(k, views[k]);
            detail::fp_step(grid, coeff, dt, config.advection, cur, next);
        } else {
            assemble(k, make_measure_view(grid, cur));
            detail::fp_step(grid, coeff, dt, config.advection, cur, next);
            for (std::size_t s = 1; s < config.self_coupled_sweeps; ++s) {
                std::vector<double> guess(next);
                for (double& v : guess) v = std::max(v, 0.0);
                const double gm = quadrature_mass(grid, guess);
                for (double& v : guess) v /= gm;
                assemble(k, make_measure_view(grid, guess));
                detail::fp_step(grid, coeff, dt, config.advection, cur, next);
            }
        }

        const double before = quadrature_mass(grid, cur);
        const double after = quadrature_mass(grid, next);
        const double drift = std::abs(after - before);
        diag.mass_drift.push_back(drift);
        diag.max_mass_drift = std::max(diag.max_mass_drift, drift);
        if (!(drift <= config.mass_drift_tolerance)) {
            throw SolverError("FP mass drift " + std::to_string(drift) + " at step " + std::to_string(k));
        }
        for (std::size_t n = 0; n < nodes; ++n) {
            const double v = next[n];
            if (!std::isfinite(v)) {
                throw SolverError("FP density is not finite at level " + std::to_string(k + 1) + ", node " +
                                  std::to_string(n));
            }
            diag.min_density = std::min(diag.min_density, v);
            if (v < -config.negative_tolerance) {
                throw SolverError("FP density " + std::to_string(v) + " below tolerance at level " +
                                  std::to_string(k + 1) + ", node " + std::to_string(n));
            }
            if (v < 0.0) {
                next[n] = 0.0;
                ++diag.clipped_nodes;
            }
        }
        if (config.renormalize_each_step) {
            const double mass = quadrature_mass(grid, next);
            for (double& v : next) v /= mass;
        }
        std::copy(next.begin(), next.end(), m.level(k + 1).begin());
    }
    if (diagnostics) *diagnostics = diag;
    return m;
}

/// Uncontrolled form: the drift ignores the control.
inline MeasureFlow solve_fp(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& mu_flow,
                            const FpSolverConfig& config = {}, FpDiagnostics* diagnostics = nullptr) {
    return solve_fp(problem, grid, mu_flow, PolicyField{}, config, diagnostics);
}

}  // namespace mfg
