#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

/// H(t,x,m,alpha,p) = <p, b0 + b1> + f0 + f1.
inline double evaluate_H(const ProblemSpec& problem, double t, const Vec& x, const MeasureView& m, const Vec& alpha,
                         const Vec& p) {
    const Vec b0 = problem.drift_b0(t, x, m);
    const Vec b1 = problem.drift_b1(t, x, alpha);
    const double measure_block = dot(p, b0) + problem.running_f0(t, x, m);
    const double control_block = dot(p, b1) + problem.running_f1(t, x, alpha);
    const double h = measure_block + control_block;
    if (!std::isfinite(h)) throw SolverError("Hamiltonian evaluated to a non-finite value in '" + problem.name + "'");
    return h;
}

/// The control-dependent block <p, b1(t,x,alpha)> + f1(t,x,alpha) that the minimizer sees.
inline double control_objective(const ProblemSpec& problem, double t, const Vec& x, const Vec& alpha, const Vec& p) {
    return dot(p, problem.drift_b1(t, x, alpha)) + problem.running_f1(t, x, alpha);
}

/// How the minimizing control phi(t,x,p) is obtained.
struct PhiEvaluator {
    enum class Mode { closed_form, grid_search };
    Mode mode = Mode::closed_form;
    Vec lower = zero_vec();
    Vec upper = zero_vec();
    std::size_t points_per_dim = 0;

    /// Control-grid node i along dimension d.
    double control_coordinate(std::size_t i, std::size_t d) const noexcept {
        if (points_per_dim <= 1) return lower[d];
        return lower[d] + static_cast<double>(i) * (upper[d] - lower[d]) / static_cast<double>(points_per_dim - 1);
    }
    double control_spacing(std::size_t d) const noexcept {
        return points_per_dim <= 1 ? 0.0 : (upper[d] - lower[d]) / static_cast<double>(points_per_dim - 1);
    }
};

/// Grid search over the problem's bounded control space.
inline PhiEvaluator grid_search_evaluator(const ProblemSpec& problem) {
    if (!problem.control_space.bounded()) {
        throw InvalidArgument("grid search needs a bounded control space in '" + problem.name + "'");
    }
    PhiEvaluator ev;
    ev.mode = PhiEvaluator::Mode::grid_search;
    ev.lower = problem.control_space.lower;
    ev.upper = problem.control_space.upper;
    ev.points_per_dim = problem.control_space.points_per_dim;
    if (ev.points_per_dim < 1) throw InvalidArgument("control grid is empty");
    return ev;
}

/// Closed form when the problem provides one, grid search over its control box otherwise.
inline PhiEvaluator default_evaluator(const ProblemSpec& problem) {
    if (problem.closed_form_phi) return {};
    return grid_search_evaluator(problem);
}

/// phi(t,x,p) = argmin over admissible alpha of <p, b1(t,x,alpha)> + f1(t,x,alpha).
///
/// Grid search visits control-grid points in lexicographic order and keeps the first strict
/// minimum, so ties resolve to the lexicographically smallest control.
inline Vec minimize_H(const ProblemSpec& problem, const PhiEvaluator& evaluator, double t, const Vec& x, const Vec& p) {
    if (!all_finite(p)) throw InvalidArgument("minimize_H: non-finite costate");
    if (evaluator.mode == PhiEvaluator::Mode::closed_form) {
        if (!problem.closed_form_phi) {
            throw InvalidArgument("closed-form minimizer requested but '" + problem.name + "' has none");
        }
        return (*problem.closed_form_phi)(t, x, p);
    }
    const std::size_t npts = evaluator.points_per_dim;
    const std::size_t outer = npts;
    const std::size_t inner = problem.dim == 2 ? npts : 1;
    double best = std::numeric_limits<double>::infinity();
    Vec arg = zero_vec();
    bool found = false;
    for (std::size_t i = 0; i < outer; ++i) {
        for (std::size_t j = 0; j < inner; ++j) {
            Vec alpha = zero_vec();
            alpha[0] = evaluator.control_coordinate(i, 0);
            if (problem.dim == 2) alpha[1] = evaluator.control_coordinate(j, 1);
            const double v = control_objective(problem, t, x, alpha, p);
            if (std::isfinite(v) && v < best) {
                best = v;
                arg = alpha;
                found = true;
            }
        }
    }
    if (!found) throw SolverError("minimize_H: every control-grid evaluation was non-finite");
    return arg;
}

}  // namespace mfg
