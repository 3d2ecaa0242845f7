#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <tuple>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/hamiltonian/hamiltonian.hpp"
#include "mfg/particle/particle.hpp"
#include "mfg/solver/apply_phi.hpp"
#include "mfg/util/philox.hpp"

namespace mfg {

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
};

/// Sample mean and standard error of the mean; exact when all samples agree.
inline CostEstimate summarize_samples(std::span<const double> x, std::uint64_t seed = 0) {
    CostEstimate e;
    e.n_paths = x.size();
    e.seed = seed;
    if (x.empty()) return e;
    bool constant = true;
    for (double v : x) constant = constant && v == x[0];
    if (constant) {
        e.mean = x[0];
        return e;
    }
    double s = 0.0;
    for (double v : x) s += v;
    e.mean = s / static_cast<double>(x.size());
    if (x.size() > 1) {
        double ss = 0.0;
        for (double v : x) ss += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
    }
    return e;
}

/// Cost of every simulated path: sum_k f(t_k, X_k, m(t_k), alpha_k) dt + g(X_N, m(T)).
inline std::vector<double> path_costs(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& m_flow,
                                      const PolicyFn& policy, std::size_t n_paths, std::uint64_t seed) {
    std::vector<double> running(n_paths, 0.0), cost(n_paths, 0.0);
    const double T = grid.horizon();
    const auto nt = static_cast<double>(grid.time_steps());
    run_paths(
        problem, grid, m_flow, &policy, n_paths, seed,
        [&](std::size_t i, std::size_t, double t, const Vec& x, const Vec& alpha, const MeasureView& view) {
            running[i] += problem.running_cost(t, x, view, alpha);
        },
        [&](std::size_t i, const Vec& x, const MeasureView& view) {
            cost[i] = running[i] * T / nt + problem.terminal_g(x, view);
        });
    for (double c : cost) {
        if (!std::isfinite(c)) throw SolverError("path cost is not finite");
    }
    return cost;
}

/// Monte Carlo estimate of J(policy | m_flow) with left-endpoint time quadrature.
inline CostEstimate evaluate_cost(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& m_flow,
                                  const PolicyFn& policy, std::size_t n_paths, std::uint64_t seed) {
    const auto c = path_costs(problem, grid, m_flow, policy, n_paths, seed);
    return summarize_samples(c, seed);
}

/// Grid quadrature of u(0, .) against m0.
inline double expected_initial_value(const ValueField& u, std::span<const double> m0_density, const Grid& grid) {
    if (u.values.nodes() != grid.num_nodes() || m0_density.size() != grid.num_nodes()) {
        throw InvalidArgument("expected_initial_value: shapes do not match the grid");
    }
    const auto u0 = u.values.level(0);
    double s = 0.0;
    for (std::size_t n = 0; n < u0.size(); ++n) s += u0[n] * m0_density[n];
    return s * grid.cell_volume();
}

/// Smooth bounded perturbation field eta(t, x): for each component c,
/// cos(w_t t + phi_c0) prod_d sin(w_d x_d + phi_cd) with random frequencies and phases.
struct PerturbationField {
    std::array<double, kMaxDim> freq{};
    double time_freq = 0.0;
    std::array<std::array<double, kMaxDim + 1>, kMaxDim> phase{};
    std::size_t dim = 1;

    Vec operator()(double t, const Vec& x) const noexcept {
        Vec out = zero_vec();
        for (std::size_t c = 0; c < dim; ++c) {
            double v = std::cos(time_freq * t + phase[c][0]);
            for (std::size_t d = 0; d < dim; ++d) v *= std::sin(freq[d] * x[d] + phase[c][d + 1]);
            out[c] = v;
        }
        return out;
    }
};

inline PerturbationField random_perturbation(std::size_t dim, std::uint64_t seed, std::uint64_t index) {
    RandomStream rs(Philox4x32(seed), StreamTag::perturbation, index);
    PerturbationField p;
    p.dim = dim;
    for (std::size_t d = 0; d < dim; ++d) p.freq[d] = rs.uniform(0.5, 1.5);
    p.time_freq = rs.uniform(0.5, 3.0);
    for (std::size_t c = 0; c < dim; ++c)
        for (std::size_t d = 0; d <= dim; ++d) p.phase[c][d] = rs.uniform(0.0, 2.0 * std::numbers::pi);
    return p;
}

struct OptimalityOptions {
    std::vector<double> epsilons = {0.1, 0.3};
    double allowance = 2e-2;           // discretization allowance in the value check
    double sigma_multiplier = 3.0;
    std::vector<double> shift_epsilons = {0.1, 0.3};  // constant-shift checks (quadratic problems)
    std::optional<PhiEvaluator> evaluator;
};

struct PerturbationResult {
    std::size_t index = 0;
    double epsilon = 0.0;
    CostEstimate cost;
    double gap = 0.0;               // perturbed - feedback, per-path paired
    double combined_std_error = 0.0;
    bool passed = true;
};

struct ShiftResult {
    double epsilon = 0.0;
    double gap = 0.0;
    double expected_gap = 0.0;      // eps^2 T / 2
    double combined_std_error = 0.0;
    bool passed = true;
};

struct OptimalityReport {
    CostEstimate feedback;
    double expected_initial_value = 0.0;
    double value_gap = 0.0;          // feedback mean - expected initial value
    bool value_check_passed = false;
    std::vector<PerturbationResult> perturbations;
    bool perturbation_check_passed = true;
    std::vector<ShiftResult> shifts;  // empty unless the problem is quadratic in the control
    bool shift_check_passed = true;

    bool passed() const noexcept { return value_check_passed && perturbation_check_passed && shift_check_passed; }
};

namespace detail {

inline std::pair<double, double> paired_difference(std::span<const double> a, std::span<const double> b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const auto e = summarize_samples(d);
    return {e.mean, e.std_error};
}

}  // namespace detail

/// Statistical check that the feedback phi(t, x, Du) attains E[u(0, xi0)] and is not
/// beaten by smooth perturbations, all against the same frozen flow and noise.
inline OptimalityReport verify_optimality(const ProblemSpec& problem, const Grid& grid, const ValueField& u,
                                          const MeasureFlow& m_flow, std::size_t n_perturbations,
                                          std::size_t n_paths, std::uint64_t seed,
                                          const OptimalityOptions& options = {}) {
    const PhiEvaluator ev = options.evaluator ? *options.evaluator : default_evaluator(problem);
    const PolicyField field = feedback_policy(problem, grid, u, ev);
    const PolicyFn feedback = interpolated_policy(grid, field);
    const double z = options.sigma_multiplier;

    OptimalityReport r;
    const auto base = path_costs(problem, grid, m_flow, feedback, n_paths, seed);
    r.feedback = summarize_samples(base, seed);
    r.expected_initial_value = expected_initial_value(u, discretize_initial_density(problem, grid), grid);
    r.value_gap = r.feedback.mean - r.expected_initial_value;
    r.value_check_passed = std::abs(r.value_gap) <= z * r.feedback.std_error + options.allowance;

    for (std::size_t j = 0; j < n_perturbations; ++j) {
        const PerturbationField eta = random_perturbation(grid.dim(), seed, j);
        for (double eps : options.epsilons) {
            const PolicyFn perturbed = [&, eps](std::size_t k, double t, const Vec& x) {
                return feedback(k, t, x) + eps * eta(t, x);
            };
            const auto c = path_costs(problem, grid, m_flow, perturbed, n_paths, seed);
            PerturbationResult p;
            p.index = j;
            p.epsilon = eps;
            p.cost = summarize_samples(c, seed);
            std::tie(p.gap, p.combined_std_error) = detail::paired_difference(c, base);
            p.passed = p.cost.mean >= r.feedback.mean - z * p.combined_std_error;
            r.perturbation_check_passed = r.perturbation_check_passed && p.passed;
            r.perturbations.push_back(p);
        }
    }

    if (problem.quadratic_control) {
        for (double eps : options.shift_epsilons) {
            Vec e1 = zero_vec();
            e1[0] = eps;
            const PolicyFn shifted = [&, e1](std::size_t k, double t, const Vec& x) { return feedback(k, t, x) + e1; };
            const auto c = path_costs(problem, grid, m_flow, shifted, n_paths, seed);
            ShiftResult s;
            s.epsilon = eps;
            s.expected_gap = 0.5 * eps * eps * grid.horizon();
            std::tie(s.gap, s.combined_std_error) = detail::paired_difference(c, base);
            s.passed = std::abs(s.gap - s.expected_gap) <= z * s.combined_std_error + options.allowance;
            r.shift_check_passed = r.shift_check_passed && s.passed;
            r.shifts.push_back(s);
        }
    }
    return r;
}

}  // namespace mfg
