#pragma once

// Hand-rolled generators and small problem builders shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mfg/mfg.hpp"

namespace mfg::test {

/// Random nonnegative unit-mass density on a grid; `support` nodes carry mass, chosen at random.
inline std::vector<double> random_density(std::mt19937_64& rng, const Grid& grid, std::size_t support) {
    std::vector<double> m(grid.num_nodes(), 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, grid.num_nodes() - 1);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    for (std::size_t s = 0; s < support; ++s) m[pick(rng)] += w(rng);
    double mass = 0.0;
    for (double v : m) mass += v;
    for (double& v : m) v /= mass * grid.cell_volume();
    return m;
}

/// Random atoms (x_i, w_i) with unit total mass.
struct Atoms {
    std::vector<double> x;
    std::vector<double> w;
};

inline Atoms random_atoms(std::mt19937_64& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
    Atoms a;
    std::uniform_real_distribution<double> pos(lo, hi), wt(0.01, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a.x.push_back(pos(rng));
        a.w.push_back(wt(rng));
        total += a.w.back();
    }
    for (double& v : a.w) v /= total;
    return a;
}

inline DiscreteMeasure to_measure(const Atoms& a) {
    DiscreteMeasure m;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
        m.points.push_back({a.x[i], 0.0});
        m.weights.push_back(a.w[i]);
    }
    return m;
}

/// Problem with constant drift b, constant diffusion sigma I, running cost f, terminal
/// cost g and Gaussian m0; no control.
inline ProblemSpec constant_problem(std::size_t dim, double b, double sigma, double f, double g, double m0_mean = 0.0,
                                    double m0_var = 0.25) {
    ProblemSpec p;
    p.name = "constant";
    p.dim = dim;
    p.horizon = 1.0;
    p.drift_b0 = [b, dim](double, const Vec&, const MeasureView&) { return dim == 1 ? Vec{b, 0.0} : Vec{b, b}; };
    p.diffusion_sigma = [sigma, dim](double, const Vec&, const MeasureView&) { return scaled_identity(sigma, dim); };
    p.running_f0 = [f](double, const Vec&, const MeasureView&) { return f; };
    p.terminal_g = [g](const Vec&, const MeasureView&) { return g; };
    p.initial_density = [dim, m0_mean, m0_var](const Vec& x) {
        return catalog::gaussian_density(x, Vec{m0_mean, m0_mean}, m0_var, dim);
    };
    catalog::set_no_control(p);
    const double a = std::max(0.5 * sigma * sigma, 1e-6);
    p.constants = {a, a, 10.0};
    return p;
}

/// Quadratic-control problem: b = alpha, f = |alpha|^2 / 2 + f0, terminal g, sigma I.
inline ProblemSpec quadratic_problem(std::size_t dim, double sigma, TerminalCost g) {
    ProblemSpec p = constant_problem(dim, 0.0, sigma, 0.0, 0.0);
    p.name = "quadratic";
    p.terminal_g = std::move(g);
    catalog::set_quadratic_control(p);
    return p;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Max |a - b| over every level and every node at least `margin` nodes from the boundary.
inline double interior_max_error(const Grid& grid, const LevelField& a, const LevelField& b, std::size_t margin) {
    const std::size_t nx = grid.nodes_per_dim();
    double worst = 0.0;
    for (std::size_t k = 0; k < a.levels(); ++k) {
        for (std::size_t n = 0; n < a.nodes(); ++n) {
            bool inside = true;
            for (std::size_t d = 0; d < grid.dim(); ++d) {
                const std::size_t i = grid.axis_index(n, d);
                inside = inside && i >= margin && i + margin < nx;
            }
            if (inside) worst = std::max(worst, std::abs(a.at(k, n) - b.at(k, n)));
        }
    }
    return worst;
}

/// sup |Du| over interior nodes of every level.
inline double interior_gradient_sup(const Grid& grid, const ValueField& u, std::size_t margin) {
    const std::size_t nx = grid.nodes_per_dim();
    double worst = 0.0;
    for (std::size_t k = 0; k < u.gradient.size(); ++k) {
        for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
            bool inside = true;
            for (std::size_t d = 0; d < grid.dim(); ++d) {
                const std::size_t i = grid.axis_index(n, d);
                inside = inside && i >= margin && i + margin < nx;
            }
            if (inside) worst = std::max(worst, norm(u.gradient[k][n]));
        }
    }
    return worst;
}

}  // namespace mfg::test
