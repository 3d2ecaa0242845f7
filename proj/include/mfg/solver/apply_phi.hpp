#pragma once

#include <cstddef>
#include <vector>

#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/fp/fp_solver.hpp"
#include "mfg/hamiltonian/hamiltonian.hpp"
#include "mfg/hjb/hjb_solver.hpp"
#include "mfg/util/parallel.hpp"

namespace mfg {

/// Solver settings used by one evaluation of the map Phi.
struct PhiConfigs {
    HjbSolverConfig hjb;
    FpSolverConfig fp;
};

struct PhiResult {
    ValueField u;
    MeasureFlow m;
    PolicyField policy;
    HjbDiagnostics hjb_diagnostics;
    FpDiagnostics fp_diagnostics;
};

/// Feedback control phi(t_k, x, Du(t_k, x)) at every level and node.
inline PolicyField feedback_policy(const ProblemSpec& problem, const Grid& grid, const ValueField& u,
                                   const PhiEvaluator& evaluator) {
    PolicyField policy(grid.num_levels(), std::vector<Vec>(grid.num_nodes(), zero_vec()));
    for (std::size_t k = 0; k < grid.num_levels(); ++k) {
        const double t = grid.time(k);
        parallel_for(0, grid.num_nodes(), [&](std::size_t n) {
            policy[k][n] = minimize_H(problem, evaluator, t, grid.point(n), u.gradient[k][n]);
        });
    }
    return policy;
}

/// Phi(mu): solve the HJB equation under mu, take the feedback control, then solve the FP
/// equation under mu with that control.
inline PhiResult apply_phi(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& mu,
                           const PhiConfigs& configs = {}) {
    PhiResult r;
    r.u = solve_hjb(problem, grid, mu, configs.hjb, &r.hjb_diagnostics);
    const PhiEvaluator evaluator = configs.hjb.evaluator ? *configs.hjb.evaluator : default_evaluator(problem);
    r.policy = feedback_policy(problem, grid, r.u, evaluator);
    r.m = solve_fp(problem, grid, mu, r.policy, configs.fp, &r.fp_diagnostics);
    return r;
}

}  // namespace mfg
