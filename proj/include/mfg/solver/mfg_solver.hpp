#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/measure/regularity.hpp"
#include "mfg/measure/wasserstein.hpp"
#include "mfg/solver/apply_phi.hpp"
#include "mfg/solver/pde_residual.hpp"

namespace mfg {

struct FixedPointConfig {
    enum class InitialGuess {
        constant_m0,     // mu(t) = m0 for all t
        uncontrolled_fp  // FP flow of m0 with zero control, under mu = m0
    };
    double theta = 0.5;
    double tol = 1e-4;
    std::size_t max_iters = 100;
    InitialGuess initial_guess = InitialGuess::constant_m0;
    PhiConfigs solvers;
    bool compute_pde_residual = true;
    bool compute_regularity = true;
};

struct FixedPointReport {
    std::vector<double> residual_history;
    std::size_t iterations_used = 0;
    bool converged = false;
    FlowRegularityReport final_flow_regularity;
    PdeResidual pde_residuals;
    HjbDiagnostics hjb_diagnostics;  // from the returned Phi evaluation
    FpDiagnostics fp_diagnostics;    // from the returned Phi evaluation
    double max_mass_drift = 0.0;     // over every FP solve of the run
    double min_density = 0.0;        // over every FP solve of the run
};

/// Everything needed to continue the iteration exactly where it stopped.
struct FixedPointState {
    std::size_t iteration = 0;          // Phi evaluations done
    std::vector<double> residual_history;
    MeasureFlow mu;                     // current damped iterate
    MeasureFlow last_input;             // flow fed to the most recent Phi evaluation
    MeasureFlow last_output;            // most recent Phi output (initial guess before any)
    double max_mass_drift = 0.0;
    double min_density = 0.0;
};

struct FixedPointHooks {
    // Called after every iteration; return false to stop early (not converged).
    std::function<bool(const FixedPointState&)> after_iteration;
};

struct MfgSolution {
    ValueField u;
    MeasureFlow m;
    PolicyField policy;
    FixedPointReport report;
};

inline void validate_fixed_point_config(const FixedPointConfig& c) {
    if (!(c.theta > 0.0 && c.theta <= 1.0)) throw InvalidArgument("damping theta must lie in (0, 1]");
    if (!(c.tol > 0.0)) throw InvalidArgument("fixed-point tolerance must be positive");
    if (c.max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
}

/// Initial iterate per config.
inline MeasureFlow initial_flow(const ProblemSpec& problem, const Grid& grid, const FixedPointConfig& config) {
    MeasureFlow flow = constant_flow(problem, grid);
    if (config.initial_guess == FixedPointConfig::InitialGuess::uncontrolled_fp) {
        flow = solve_fp(problem, grid, flow, config.solvers.fp);
    }
    return flow;
}

/// Starting state of a fresh run.
inline FixedPointState initial_state(const ProblemSpec& problem, const Grid& grid, const FixedPointConfig& config) {
    FixedPointState s;
    s.mu = initial_flow(problem, grid, config);
    s.last_output = s.mu;
    return s;
}

/// Damped Picard iteration for the fixed point of Phi.
///
/// Iteration k evaluates m_k = Phi(mu_{k-1}), records rho(m_k, m_{k-1}) with m_0 = mu_0,
/// and sets mu_k = (1 - theta) mu_{k-1} + theta m_k. It stops once the recorded residual
/// is at most tol. The returned pair is the Phi output with the smallest residual, which
/// is the last one on convergence.
inline MfgSolution solve_mfg(const ProblemSpec& problem, const Grid& grid, const FixedPointConfig& config = {},
                             std::optional<FixedPointState> resume = std::nullopt, const FixedPointHooks& hooks = {}) {
    validate_problem(problem);
    validate_fixed_point_config(config);
    if (problem.dim != grid.dim()) throw InvalidArgument("problem and grid dimensions differ");

    FixedPointState state = resume ? std::move(*resume) : initial_state(problem, grid, config);
    if (state.mu.levels() != grid.num_levels() || state.mu.nodes() != grid.num_nodes() ||
        state.last_output.levels() != grid.num_levels() || state.last_output.nodes() != grid.num_nodes() ||
        (state.iteration > 0 && state.last_input.raw().size() != state.mu.raw().size())) {
        throw InvalidArgument("resume state does not match the grid");
    }

    MfgSolution best;
    double best_residual = std::numeric_limits<double>::infinity();
    bool have_best = false;
    bool converged = !state.residual_history.empty() && state.residual_history.back() <= config.tol;
    bool stopped = false;

    while (!converged && !stopped && state.iteration < config.max_iters) {
        PhiResult phi = apply_phi(problem, grid, state.mu, config.solvers);
        state.last_input = state.mu;
        const double r = flow_distance(grid, phi.m, state.last_output);
        state.residual_history.push_back(r);
        ++state.iteration;
        state.max_mass_drift = std::max(state.max_mass_drift, phi.fp_diagnostics.max_mass_drift);
        state.min_density = std::min(state.min_density, phi.fp_diagnostics.min_density);

        auto& mu = state.mu.raw();
        const auto& out = phi.m.raw();
        for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = (1.0 - config.theta) * mu[i] + config.theta * out[i];
        state.last_output = phi.m;
        converged = r <= config.tol;

        if (r <= best_residual || converged) {
            best_residual = r;
            best.u = std::move(phi.u);
            best.m = std::move(phi.m);
            best.policy = std::move(phi.policy);
            best.report.hjb_diagnostics = phi.hjb_diagnostics;
            best.report.fp_diagnostics = std::move(phi.fp_diagnostics);
            have_best = true;
        }
        if (hooks.after_iteration && !hooks.after_iteration(state) && !converged) stopped = true;
    }

    if (!have_best) {
        // Resumed from a finished state: re-evaluating the last input reproduces the output.
        const MeasureFlow& input = state.iteration > 0 ? state.last_input : state.mu;
        PhiResult phi = apply_phi(problem, grid, input, config.solvers);
        best.u = std::move(phi.u);
        best.m = std::move(phi.m);
        best.policy = std::move(phi.policy);
        best.report.hjb_diagnostics = phi.hjb_diagnostics;
        best.report.fp_diagnostics = std::move(phi.fp_diagnostics);
    }
    auto& report = best.report;
    report.residual_history = state.residual_history;
    report.iterations_used = state.residual_history.size();
    report.converged = !report.residual_history.empty() && report.residual_history.back() <= config.tol;
    report.max_mass_drift = state.max_mass_drift;
    report.min_density = state.min_density;
    if (config.compute_regularity) report.final_flow_regularity = flow_regularity(grid, best.m);
    if (config.compute_pde_residual) {
        report.pde_residuals = pde_residual(problem, grid, best.u, best.m, kResidualMargin, config.solvers.hjb.evaluator);
    }
    return best;
}

/// Two damping choices run to their limits and compared in rho.
struct DampingComparison {
    double theta_a = 0.5;
    double theta_b = 1.0;
    bool converged_a = false;
    bool converged_b = false;
    double rho_between = 0.0;
    bool potential_non_uniqueness = false;  // rho_between > 100 tol
};

inline DampingComparison compare_damping(const ProblemSpec& problem, const Grid& grid, FixedPointConfig config,
                                         double theta_a = 0.5, double theta_b = 1.0) {
    config.compute_pde_residual = false;
    config.compute_regularity = false;
    DampingComparison c;
    c.theta_a = theta_a;
    c.theta_b = theta_b;
    config.theta = theta_a;
    const auto a = solve_mfg(problem, grid, config);
    config.theta = theta_b;
    const auto b = solve_mfg(problem, grid, config);
    c.converged_a = a.report.converged;
    c.converged_b = b.report.converged;
    c.rho_between = flow_distance(grid, a.m, b.m);
    c.potential_non_uniqueness = c.rho_between > 100.0 * config.tol;
    return c;
}

}  // namespace mfg
