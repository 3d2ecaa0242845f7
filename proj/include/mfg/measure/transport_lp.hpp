#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

/// Finitely supported measure on R^n.
struct DiscreteMeasure {
    std::vector<Vec> points;
    std::vector<double> weights;
};

/// Largest support accepted by the transport linear program.
inline constexpr std::size_t kMaxLpSupport = 400;

namespace detail {

// Min-cost transportation by successive shortest paths with node potentials.
//
// Sources are the atoms of the first measure, sinks those of the second; the complete
// bipartite graph carries cost |x_i - y_j|. Each phase runs a dense Dijkstra on reduced
// costs from every source with remaining supply, then pushes flow along the cheapest path
// to a sink with remaining demand. Reduced costs stay nonnegative, so the final flow is an
// optimal vertex of the transport polytope.
class TransportSolver {
public:
    TransportSolver(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
        : n_(supply.size()), m_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
          cost_(std::move(cost)), flow_(n_ * m_, 0.0), pot_src_(n_, 0.0), pot_snk_(m_, 0.0) {}

    double solve() {
        const double total = std::accumulate(supply_.begin(), supply_.end(), 0.0);
        const double eps = 1e-15 * std::max(1.0, total);
        std::vector<double> dist(n_ + m_);
        std::vector<std::ptrdiff_t> parent(n_ + m_);
        std::vector<char> done(n_ + m_);
        constexpr double inf = std::numeric_limits<double>::infinity();
        // Each augmentation exhausts a source, a sink or a reverse edge.
        const std::size_t max_phases = 4 * (n_ + m_) * (n_ + m_) + 16;
        for (std::size_t phase = 0; phase < max_phases; ++phase) {
            bool any_supply = false;
            for (std::size_t i = 0; i < n_; ++i) {
                if (supply_[i] > eps) any_supply = true;
            }
            if (!any_supply) break;

            std::fill(dist.begin(), dist.end(), inf);
            std::fill(parent.begin(), parent.end(), -1);
            std::fill(done.begin(), done.end(), 0);
            for (std::size_t i = 0; i < n_; ++i) {
                if (supply_[i] > eps) dist[i] = 0.0;
            }
            std::ptrdiff_t target = -1;
            while (true) {
                std::ptrdiff_t u = -1;
                double best = inf;
                for (std::size_t v = 0; v < n_ + m_; ++v) {
                    if (!done[v] && dist[v] < best) {
                        best = dist[v];
                        u = static_cast<std::ptrdiff_t>(v);
                    }
                }
                if (u < 0) break;
                done[u] = 1;
                const auto uu = static_cast<std::size_t>(u);
                if (uu >= n_) {
                    const std::size_t j = uu - n_;
                    if (demand_[j] > eps) {
                        target = u;
                        break;
                    }
                    // Reverse edges sink j -> source i exist where flow is positive.
                    for (std::size_t i = 0; i < n_; ++i) {
                        if (done[i] || flow_[i * m_ + j] <= eps) continue;
                        const double rc = std::max(0.0, -reduced(i, j));
                        if (dist[uu] + rc < dist[i]) {
                            dist[i] = dist[uu] + rc;
                            parent[i] = u;
                        }
                    }
                } else {
                    for (std::size_t j = 0; j < m_; ++j) {
                        const std::size_t v = n_ + j;
                        if (done[v]) continue;
                        const double rc = std::max(0.0, reduced(uu, j));
                        if (dist[uu] + rc < dist[v]) {
                            dist[v] = dist[uu] + rc;
                            parent[v] = u;
                        }
                    }
                }
            }
            if (target < 0) {
                // Round-off residue after all demand is met is not infeasibility.
                const double left = std::accumulate(supply_.begin(), supply_.end(), 0.0);
                if (left <= 1e-12 * std::max(1.0, total)) break;
                throw InvalidArgument("transport problem is infeasible");
            }

            const double dt = dist[static_cast<std::size_t>(target)];
            for (std::size_t i = 0; i < n_; ++i) pot_src_[i] += std::min(dist[i], dt);
            for (std::size_t j = 0; j < m_; ++j) pot_snk_[j] += std::min(dist[n_ + j], dt);

            // Bottleneck along the path.
            const std::size_t sink = static_cast<std::size_t>(target) - n_;
            double push = demand_[sink];
            std::ptrdiff_t v = target;
            while (parent[static_cast<std::size_t>(v)] >= 0) {
                const auto p = static_cast<std::size_t>(parent[static_cast<std::size_t>(v)]);
                const auto vv = static_cast<std::size_t>(v);
                if (vv < n_) push = std::min(push, flow_[vv * m_ + (p - n_)]);  // reverse edge p(sink) -> v(source)
                v = parent[vv];
            }
            push = std::min(push, supply_[static_cast<std::size_t>(v)]);

            v = target;
            while (parent[static_cast<std::size_t>(v)] >= 0) {
                const auto p = static_cast<std::size_t>(parent[static_cast<std::size_t>(v)]);
                const auto vv = static_cast<std::size_t>(v);
                if (vv >= n_) {
                    flow_[p * m_ + (vv - n_)] += push;
                } else {
                    flow_[vv * m_ + (p - n_)] -= push;
                }
                v = parent[vv];
            }
            supply_[static_cast<std::size_t>(v)] -= push;
            demand_[sink] -= push;
        }
        double total_cost = 0.0;
        for (std::size_t idx = 0; idx < flow_.size(); ++idx) total_cost += flow_[idx] * cost_[idx];
        return total_cost;
    }

private:
    double reduced(std::size_t i, std::size_t j) const { return cost_[i * m_ + j] + pot_src_[i] - pot_snk_[j]; }

    std::size_t n_, m_;
    std::vector<double> supply_, demand_, cost_, flow_, pot_src_, pot_snk_;
};

}  // namespace detail

/// Wasserstein-1 distance by solving the discrete transport linear program
///   min sum_ij gamma_ij |x_i - y_j|  subject to the two marginal constraints.
/// Exact but cubic in the support size; intended as ground truth on small supports.
inline double d1_lp(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.points.size() != a.weights.size() || b.points.size() != b.weights.size()) {
        throw InvalidArgument("measure points/weights length mismatch");
    }
    std::vector<Vec> xs, ys;
    std::vector<double> supply, demand;
    double ta = 0.0, tb = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        if (!(a.weights[i] >= 0.0) || !std::isfinite(a.weights[i])) throw InvalidArgument("negative or non-finite weight");
        ta += a.weights[i];
        if (a.weights[i] > 0.0) {
            xs.push_back(a.points[i]);
            supply.push_back(a.weights[i]);
        }
    }
    for (std::size_t j = 0; j < b.points.size(); ++j) {
        if (!(b.weights[j] >= 0.0) || !std::isfinite(b.weights[j])) throw InvalidArgument("negative or non-finite weight");
        tb += b.weights[j];
        if (b.weights[j] > 0.0) {
            ys.push_back(b.points[j]);
            demand.push_back(b.weights[j]);
        }
    }
    if (xs.size() > kMaxLpSupport || ys.size() > kMaxLpSupport) {
        throw InvalidArgument("support too large for the transport LP (max " + std::to_string(kMaxLpSupport) + ")");
    }
    if (xs.empty() || ys.empty() || std::abs(ta - tb) > 1e-9 * std::max(1.0, ta)) {
        throw InvalidArgument("infeasible marginals: total masses differ");
    }
    // Scale the second marginal so totals agree exactly up to round-off.
    for (double& d : demand) d *= ta / tb;
    std::vector<double> cost(xs.size() * ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) cost[i * ys.size() + j] = norm(xs[i] - ys[j]);
    }
    detail::TransportSolver solver(std::move(supply), std::move(demand), std::move(cost));
    return solver.solve();
}

/// Converts a grid density into point masses at the nodes.
inline DiscreteMeasure to_discrete_measure(const Grid& grid, std::span<const double> density) {
    DiscreteMeasure out;
    const double w = grid.cell_volume();
    for (std::size_t n = 0; n < density.size(); ++n) {
        out.points.push_back(grid.point(n));
        out.weights.push_back(density[n] * w);
    }
    return out;
}

/// d1_lp on two grid densities.
inline double d1_lp(const Grid& grid, std::span<const double> m1, std::span<const double> m2) {
    return d1_lp(to_discrete_measure(grid, m1), to_discrete_measure(grid, m2));
}

}  // namespace mfg
