#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/interpolate.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/measure/density.hpp"
#include "mfg/measure/wasserstein.hpp"
#include "mfg/util/parallel.hpp"
#include "mfg/util/philox.hpp"

namespace mfg {

/// Control as a function of (time level, time, state).
using PolicyFn = std::function<Vec(std::size_t k, double t, const Vec& x)>;

/// Multilinear interpolation of a node policy at level k.
inline PolicyFn interpolated_policy(const Grid& grid, const PolicyField& field) {
    if (field.size() < grid.time_steps()) throw InvalidArgument("policy field has too few levels");
    return [&grid, &field](std::size_t k, double, const Vec& x) { return interpolate_field(field[k], grid, x); };
}

inline constexpr double kLeakWarning = 1e-3;

struct SimulationConfig {
    std::size_t record_stride = 1;  // keep positions at levels 0, s, 2s, ... and the last one
    bool record_positions = true;
};

struct ParticleEnsemble {
    std::vector<std::vector<Vec>> positions;  // [record][particle]
    std::vector<std::size_t> levels;          // time level of each record
    std::size_t n_particles = 0;
    std::uint64_t seed = 0;
    double boundary_leak = 0.0;      // clamped particle-steps / all particle-steps
    double max_abs_position = 0.0;   // sup over particles and steps of |X|
    bool leak_warning = false;       // boundary_leak > 1e-3
};

namespace detail {

// Piecewise-constant inverse CDF of the discretized m0 in 1D: pick a cell by node mass,
// then a uniform point in it. End cells are the half cells inside the box.
class InverseCdfSampler {
public:
    InverseCdfSampler(const Grid& grid, std::span<const double> density) : grid_(grid) {
        cdf_.resize(density.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < density.size(); ++i) {
            acc += density[i];
            cdf_[i] = acc;
        }
        if (!(acc > 0.0)) throw InvalidArgument("initial density has no mass to sample from");
        for (double& c : cdf_) c /= acc;
        cdf_.back() = 1.0;
    }

    double operator()(double u_cell, double u_pos) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u_cell);
        const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
        const double h = grid_.spacing(0);
        const double lo = std::max(grid_.coordinate(j, 0) - 0.5 * h, grid_.x_min(0));
        const double hi = std::min(grid_.coordinate(j, 0) + 0.5 * h, grid_.x_max(0));
        return lo + u_pos * (hi - lo);
    }

private:
    const Grid& grid_;
    std::vector<double> cdf_;
};

// Rejection sampling against the interpolated density on the box (2D).
inline Vec rejection_sample(const Grid& grid, std::span<const double> density, double max_density,
                            const Philox4x32& gen, std::uint64_t item) {
    constexpr std::uint32_t kMaxRounds = 1u << 20;
    for (std::uint32_t round = 0; round < kMaxRounds; ++round) {
        const auto u = gen.uniforms(make_counter(StreamTag::rejection, item, 0, round));
        Vec x = {grid.x_min(0) + u[0] * (grid.x_max(0) - grid.x_min(0)),
                 grid.x_min(1) + u[1] * (grid.x_max(1) - grid.x_min(1))};
        if (u[2] * max_density <= interpolate_field(density, grid, x)) return x;
    }
    throw SolverError("rejection sampling of the initial density failed");
}

}  // namespace detail

/// Draws the initial state of every path. Path i always uses the same random numbers.
class InitialSampler {
public:
    InitialSampler(const ProblemSpec& problem, const Grid& grid, std::uint64_t seed)
        : grid_(grid), gen_(seed), m0_(discretize_initial_density(problem, grid)) {
        if (grid.dim() == 1) {
            inverse_.emplace(grid, m0_);
        } else {
            max_density_ = *std::max_element(m0_.begin(), m0_.end());
        }
    }

    Vec operator()(std::uint64_t i) const {
        if (inverse_) {
            const auto u = gen_.uniforms(make_counter(StreamTag::initial_sample, i, 0));
            return {(*inverse_)(u[0], u[1]), 0.0};
        }
        return detail::rejection_sample(grid_, m0_, max_density_, gen_, i);
    }

private:
    const Grid& grid_;
    Philox4x32 gen_;
    std::vector<double> m0_;
    std::optional<detail::InverseCdfSampler> inverse_;
    double max_density_ = 0.0;
};

/// Euler-Maruyama kernel shared by the simulator and the cost evaluator.
///
/// For every path i (in parallel) and level k it calls step(i, k, t_k, X_k, alpha_k, view_k)
/// before the update X_{k+1} = X_k + b dt + sigma sqrt(dt) Z, then final(i, X_N, view_N).
/// Measure arguments come from the frozen flow. Positions leaving the box are clamped to it.
/// Returns the number of clamped particle-steps and the largest |X| seen.
template <typename StepFn, typename FinalFn>
std::pair<std::size_t, double> run_paths(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& m_flow,
                                         const PolicyFn* policy, std::size_t n_paths, std::uint64_t seed,
                                         StepFn&& step, FinalFn&& final) {
    if (n_paths < 1) throw InvalidArgument("need at least one particle");
    if (problem.dim != grid.dim()) throw InvalidArgument("problem and grid dimensions differ");
    if (m_flow.levels() != grid.num_levels() || m_flow.nodes() != grid.num_nodes()) {
        throw InvalidArgument("measure flow does not match the grid shape");
    }
    const auto views = measure_views(grid, m_flow);
    const InitialSampler sampler(problem, grid, seed);
    const Philox4x32 gen(seed);
    const std::size_t dim = grid.dim();
    const double dt = grid.dt();
    const double sdt = std::sqrt(dt);
    std::atomic<std::size_t> leaked{0};
    std::vector<double> max_abs(n_paths, 0.0);

    parallel_for(0, n_paths, [&](std::size_t i) {
        Vec x = sampler(i);
        std::size_t local_leak = 0;
        double local_max = norm(x);
        for (std::size_t k = 0; k < grid.time_steps(); ++k) {
            const double t = grid.time(k);
            const MeasureView& view = views[k];
            const Vec alpha = policy ? (*policy)(k, t, x) : zero_vec();
            step(i, k, t, x, alpha, view);
            const Vec b = problem.drift(t, x, view, alpha);
            const Mat sigma = problem.diffusion_sigma(t, x, view);
            const auto z4 = gen.normals(make_counter(StreamTag::increment, i, static_cast<std::uint32_t>(k)));
            const Vec z = {z4[0], dim == 2 ? z4[1] : 0.0};
            Vec noise = mat_vec(sigma, z);
            if (dim == 1) noise[1] = 0.0;
            x = x + dt * b + sdt * noise;
            bool clamped = false;
            for (std::size_t d = 0; d < dim; ++d) {
                if (!std::isfinite(x[d])) throw SolverError("particle position is not finite");
                if (x[d] < grid.x_min(d)) x[d] = grid.x_min(d), clamped = true;
                if (x[d] > grid.x_max(d)) x[d] = grid.x_max(d), clamped = true;
            }
            if (clamped) ++local_leak;
            local_max = std::max(local_max, norm(x));
        }
        final(i, x, views[grid.time_steps()]);
        if (local_leak) leaked.fetch_add(local_leak, std::memory_order_relaxed);
        max_abs[i] = local_max;
    });
    return {leaked.load(), *std::max_element(max_abs.begin(), max_abs.end())};
}

namespace detail {

inline bool is_recorded(std::size_t k, std::size_t stride, std::size_t last) noexcept {
    return k % stride == 0 || k == last;
}

inline std::vector<std::size_t> recorded_levels(std::size_t last, std::size_t stride) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k <= last; ++k) {
        if (is_recorded(k, stride, last)) out.push_back(k);
    }
    return out;
}

}  // namespace detail

/// Simulates N paths of the (controlled) McKean-Vlasov SDE against the frozen flow.
/// Without a policy the control is zero.
inline ParticleEnsemble simulate(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& m_flow,
                                 const std::optional<PolicyFn>& policy, std::size_t n_particles, std::uint64_t seed,
                                 const SimulationConfig& config = {}) {
    if (config.record_stride < 1) throw InvalidArgument("record_stride must be at least 1");
    const std::size_t last = grid.time_steps();
    ParticleEnsemble e;
    e.n_particles = n_particles;
    e.seed = seed;
    if (config.record_positions) {
        e.levels = detail::recorded_levels(last, config.record_stride);
        e.positions.assign(e.levels.size(), std::vector<Vec>(n_particles, zero_vec()));
    }
    std::vector<std::size_t> slot(last + 1, 0);
    for (std::size_t r = 0; r < e.levels.size(); ++r) slot[e.levels[r]] = r;
    const std::size_t stride = config.record_stride;
    const bool rec = config.record_positions;

    const auto [leaked, max_abs] = run_paths(
        problem, grid, m_flow, policy ? &*policy : nullptr, n_particles, seed,
        [&](std::size_t i, std::size_t k, double, const Vec& x, const Vec&, const MeasureView&) {
            if (rec && detail::is_recorded(k, stride, last)) e.positions[slot[k]][i] = x;
        },
        [&](std::size_t i, const Vec& x, const MeasureView&) {
            if (rec) e.positions[slot[last]][i] = x;
        });
    e.boundary_leak = static_cast<double>(leaked) / (static_cast<double>(n_particles) * static_cast<double>(last));
    e.max_abs_position = max_abs;
    e.leak_warning = e.boundary_leak > kLeakWarning;
    return e;
}

/// d1 between the empirical law and the flow at each recorded level.
struct LawComparison {
    std::vector<std::size_t> levels;
    std::vector<double> d1;
    double max_d1 = 0.0;
};

/// Bins each recorded ensemble slice to the nearest node (histogram_density) and measures
/// its distance to m_flow at the same level with the flow metric.
inline LawComparison compare_law(const ParticleEnsemble& ensemble, const MeasureFlow& m_flow, const Grid& grid) {
    if (m_flow.levels() != grid.num_levels() || m_flow.nodes() != grid.num_nodes()) {
        throw InvalidArgument("measure flow does not match the grid shape");
    }
    LawComparison out;
    for (std::size_t r = 0; r < ensemble.levels.size(); ++r) {
        const std::size_t k = ensemble.levels[r];
        if (k >= grid.num_levels()) throw InvalidArgument("ensemble level outside the grid");
        const auto hist = histogram_density(ensemble.positions[r], grid);
        const double d = flow_metric(grid, hist.density, m_flow.level(k));
        out.levels.push_back(k);
        out.d1.push_back(d);
        out.max_d1 = std::max(out.max_d1, d);
    }
    return out;
}

/// simulate followed by compare_law without storing positions: particles are binned to
/// the nearest node on the fly with integer counts, which gives the same histograms.
inline LawComparison simulate_and_compare(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& m_flow,
                                          const std::optional<PolicyFn>& policy, std::size_t n_particles,
                                          std::uint64_t seed, std::size_t record_stride = 1,
                                          ParticleEnsemble* summary = nullptr) {
    if (record_stride < 1) throw InvalidArgument("record_stride must be at least 1");
    const std::size_t last = grid.time_steps();
    const auto levels = detail::recorded_levels(last, record_stride);
    std::vector<std::size_t> slot(last + 1, 0);
    for (std::size_t r = 0; r < levels.size(); ++r) slot[levels[r]] = r;
    const std::size_t nodes = grid.num_nodes();
    const std::size_t nx = grid.nodes_per_dim();
    std::vector<std::uint32_t> counts(levels.size() * nodes, 0);

    auto bin = [&](std::size_t k, const Vec& x) {
        std::size_t idx[kMaxDim] = {0, 0};
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            const double s = std::round((x[d] - grid.x_min(d)) / grid.spacing(d));
            idx[d] = s <= 0.0 ? 0 : (s >= static_cast<double>(nx - 1) ? nx - 1 : static_cast<std::size_t>(s));
        }
        const std::size_t n = grid.node_index(idx[0], grid.dim() == 2 ? idx[1] : 0);
        std::atomic_ref<std::uint32_t>(counts[slot[k] * nodes + n]).fetch_add(1, std::memory_order_relaxed);
    };
    const auto [leaked, max_abs] = run_paths(
        problem, grid, m_flow, policy ? &*policy : nullptr, n_particles, seed,
        [&](std::size_t, std::size_t k, double, const Vec& x, const Vec&, const MeasureView&) {
            if (detail::is_recorded(k, record_stride, last)) bin(k, x);
        },
        [&](std::size_t, const Vec& x, const MeasureView&) { bin(last, x); });

    LawComparison out;
    std::vector<double> density(nodes);
    const double scale = 1.0 / (static_cast<double>(n_particles) * grid.cell_volume());
    for (std::size_t r = 0; r < levels.size(); ++r) {
        for (std::size_t n = 0; n < nodes; ++n) density[n] = static_cast<double>(counts[r * nodes + n]) * scale;
        const double d = flow_metric(grid, density, m_flow.level(levels[r]));
        out.levels.push_back(levels[r]);
        out.d1.push_back(d);
        out.max_d1 = std::max(out.max_d1, d);
    }
    if (summary) {
        summary->n_particles = n_particles;
        summary->seed = seed;
        summary->boundary_leak = static_cast<double>(leaked) / (static_cast<double>(n_particles) * static_cast<double>(last));
        summary->max_abs_position = max_abs;
        summary->leak_warning = summary->boundary_leak > kLeakWarning;
    }
    return out;
}

/// Mean of max_t d1 over independent replicates for each ensemble size, and the
/// least-squares slope of log(mean) against log(N).
struct ScalingStudy {
    std::vector<std::size_t> n_particles;
    std::vector<double> mean_max_d1;
    std::vector<double> worst_max_d1;
    std::size_t replicates = 0;
    double slope = 0.0;
};

/// Seed of replicate r, decorrelated from the base seed.
inline std::uint64_t replicate_seed(std::uint64_t seed, std::size_t r) noexcept {
    return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(r) + 1));
}

inline double log_log_slope(std::span<const std::size_t> n, std::span<const double> y) {
    if (n.size() != y.size() || n.size() < 2) throw InvalidArgument("slope needs at least two matching points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(y[i] > 0.0)) throw InvalidArgument("slope needs positive values");
        mx += std::log(static_cast<double>(n[i]));
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n.size());
    my /= static_cast<double>(n.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double dx = std::log(static_cast<double>(n[i])) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (!(sxx > 0.0)) throw InvalidArgument("slope needs distinct ensemble sizes");
    return sxy / sxx;
}

inline ScalingStudy particle_scaling(const ProblemSpec& problem, const Grid& grid, const MeasureFlow& m_flow,
                                     const std::optional<PolicyFn>& policy, const std::vector<std::size_t>& sizes,
                                     std::size_t replicates, std::uint64_t seed) {
    if (replicates < 1) throw InvalidArgument("replicates must be at least 1");
    ScalingStudy st;
    st.n_particles = sizes;
    st.replicates = replicates;
    for (std::size_t n : sizes) {
        double sum = 0.0, worst = 0.0;
        for (std::size_t r = 0; r < replicates; ++r) {
            const double d = simulate_and_compare(problem, grid, m_flow, policy, n, replicate_seed(seed, r)).max_d1;
            sum += d;
            worst = std::max(worst, d);
        }
        st.mean_max_d1.push_back(sum / static_cast<double>(replicates));
        st.worst_max_d1.push_back(worst);
    }
    st.slope = log_log_slope(st.n_particles, st.mean_max_d1);
    return st;
}

}  // namespace mfg
