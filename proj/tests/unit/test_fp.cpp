#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

namespace mfg {
namespace {

TEST(Fp, HeatOracleAtHalfTime) {
    const auto entry = catalog_entry("heat");
    const Grid g = entry.grid.build();
    ASSERT_EQ(g.nodes_per_dim(), 321u);
    ASSERT_EQ(g.time_steps(), 500u);
    const auto m = solve_fp(entry.problem, g, constant_flow(entry.problem, g));
    const auto exact = heat_flow_density({zero_vec(), 0.25}, std::numbers::sqrt2, g);
    const std::size_t half = 250;
    ASSERT_DOUBLE_EQ(g.time(half), 0.5);
    EXPECT_LE(d1_1d(g, m.level(half), exact.level(half)), 2e-3);
    EXPECT_LE(flow_distance(g, m, exact), 2e-3);
}

TEST(Fp, ConstantDriftMovesTheMean) {
    for (double c : {-0.8, 0.5, 1.0}) {
        const auto p = test::constant_problem(1, c, 0.1, 0.0, 0.0, 0.0, 0.04);
        const Grid g = build_grid(1, -3.0, 3.0, 301, 1.0, 200);
        const auto m = solve_fp(p, g, constant_flow(p, g));
        const double m0 = mean(g, m.level(0))[0];
        for (std::size_t k = 0; k < g.num_levels(); k += 20) {
            EXPECT_NEAR(mean(g, m.level(k))[0], m0 + c * g.time(k), 1e-3);
        }
    }
}

TEST(Fp, MassConservedWithoutRenormalization) {
    for (const char* name : {"example5-weak", "uncontrolled-fp", "decoupled-hopfcole", "decoupled-hopfcole-2d"}) {
        const auto entry = catalog_entry(name);
        const Grid g = entry.grid.build();
        const auto mu = constant_flow(entry.problem, g);
        const auto u = solve_hjb(entry.problem, g, mu);
        const auto policy = feedback_policy(entry.problem, g, u, default_evaluator(entry.problem));
        FpSolverConfig cfg;
        cfg.renormalize_each_step = false;
        FpDiagnostics diag;
        const auto m = solve_fp(entry.problem, g, mu, policy, cfg, &diag);
        for (std::size_t k = 0; k < m.levels(); ++k) EXPECT_NEAR(quadrature_mass(g, m.level(k)), 1.0, 1e-8) << name;
        EXPECT_LE(diag.max_mass_drift, 1e-8) << name;
        EXPECT_EQ(diag.mass_drift.size(), g.time_steps());
        EXPECT_GE(diag.min_density, -1e-12) << name;
        EXPECT_EQ(diag.clipped_nodes, 0u) << name;
        for (double v : m.raw()) ASSERT_GE(v, 0.0) << name;
    }
}

TEST(Fp, DiscreteDualityWithBackwardEquation) {
    // Linear frozen case: u solves the backward equation with source f and no control.
    auto p = test::constant_problem(1, 0.0, 1.0, 0.0, 0.0, -0.3, 0.2);
    p.drift_b0 = [](double t, const Vec& x, const MeasureView&) { return Vec{0.5 * std::sin(x[0]) + 0.2 * t, 0.0}; };
    p.diffusion_sigma = [](double, const Vec& x, const MeasureView&) {
        return scaled_identity(std::sqrt(1.0 + 0.5 * std::cos(x[0])), 1);
    };
    p.running_f0 = [](double t, const Vec& x, const MeasureView&) { return std::exp(-x[0] * x[0]) * (1.0 + t); };
    p.terminal_g = [](const Vec& x, const MeasureView&) { return std::tanh(x[0]); };
    p.constants = {0.25, 0.75, 10.0};
    const Grid g = build_grid(1, -5.0, 5.0, 201, 1.0, 400);
    const auto mu = constant_flow(p, g);
    HjbSolverConfig hc;
    hc.padding_nodes = 0;
    const auto u = solve_hjb(p, g, mu, hc);
    FpSolverConfig fc;
    fc.renormalize_each_step = false;
    const auto m = solve_fp(p, g, mu, fc);

    const double h = g.cell_volume();
    auto pair = [&](std::size_t ku, std::size_t km) {
        double s = 0.0;
        for (std::size_t n = 0; n < g.num_nodes(); ++n) s += u.values.at(ku, n) * m.at(km, n) * h;
        return s;
    };
    const auto views = measure_views(g, mu);
    double source = 0.0, source_trapezoid = 0.0;
    for (std::size_t k = 0; k < g.time_steps(); ++k) {
        for (std::size_t n = 0; n < g.num_nodes(); ++n) {
            const double f = p.running_f0(g.time(k), g.point(n), views[k]);
            source += g.dt() * f * m.at(k + 1, n) * h;
            source_trapezoid += 0.5 * g.dt() * f * (m.at(k, n) + m.at(k + 1, n)) * h;
        }
    }
    const double lhs = pair(0, 0) - pair(g.time_steps(), g.time_steps());
    // Implicit steps pair the source at t_k with m at t_{k+1}; the identity is then exact.
    EXPECT_NEAR(lhs, source, 1e-10);
    EXPECT_NEAR(lhs, source_trapezoid, 1e-3);
    EXPECT_GT(source, 0.0);
}

TEST(Fp, WeakFormResidualShrinksUnderRefinement) {
    const auto entry = catalog_entry("uncontrolled-fp");
    auto phi = [](double x) { return std::exp(-x * x); };
    auto dphi = [](double x) { return -2.0 * x * std::exp(-x * x); };
    auto d2phi = [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); };
    double previous = 0.0;
    for (int refine = 0; refine < 3; ++refine) {
        const std::size_t nx = 61 * (1u << refine) - ((1u << refine) - 1);
        const Grid g = build_grid(1, -6.0, 6.0, nx, 1.0, 25u << refine);
        const auto mu = constant_flow(entry.problem, g);
        const auto m = solve_fp(entry.problem, g, mu);
        const auto views = measure_views(g, mu);
        const double h = g.cell_volume();
        double worst = 0.0, integral = 0.0;
        double start = 0.0;
        for (std::size_t n = 0; n < g.num_nodes(); ++n) start += phi(g.coordinate(n, 0)) * m.at(0, n) * h;
        for (std::size_t k = 0; k < g.time_steps(); ++k) {
            double now = 0.0;
            for (std::size_t n = 0; n < g.num_nodes(); ++n) {
                const Vec x = g.point(n);
                const double b = entry.problem.drift_b0(g.time(k), x, views[k])[0];
                const double a = entry.problem.diffusion(g.time(k), x, views[k])[0][0];
                integral += g.dt() * (a * d2phi(x[0]) + b * dphi(x[0])) * m.at(k + 1, n) * h;
                now += phi(x[0]) * m.at(k + 1, n) * h;
            }
            worst = std::max(worst, std::abs(now - start - integral));
        }
        EXPECT_LT(worst, 1e-2);
        if (refine > 0) {
            EXPECT_LT(worst, previous);
        }
        previous = worst;
    }
}

TEST(Fp, SelfCoupledSweepsStayCloseToLaggedCoefficients) {
    const auto entry = catalog_entry("uncontrolled-fp");
    const Grid g = entry.grid.build();
    const auto mu = constant_flow(entry.problem, g);
    const auto lagged = solve_fp(entry.problem, g, mu);
    FpSolverConfig cfg;
    cfg.self_coupled = true;
    cfg.self_coupled_sweeps = 2;
    FpDiagnostics diag;
    const auto coupled = solve_fp(entry.problem, g, mu, cfg, &diag);
    EXPECT_TRUE(is_valid_flow(g, coupled));
    EXPECT_LE(diag.max_mass_drift, 1e-8);
    // Self-coupling uses the mean of m itself, not of the frozen m0 flow, so they differ.
    EXPECT_GT(flow_distance(g, lagged, coupled), 1e-4);
    cfg.self_coupled_sweeps = 0;
    EXPECT_THROW(solve_fp(entry.problem, g, mu, cfg), InvalidArgument);
}

TEST(Fp, HeatTwoDimensionalMarginals) {
    const auto entry = make_heat(0.25, std::numbers::sqrt2, 2);
    const Grid g = entry.grid.build();
    const auto m = solve_fp(entry.problem, g, constant_flow(entry.problem, g));
    const auto exact = heat_flow_density({zero_vec(), 0.25}, std::numbers::sqrt2, g);
    EXPECT_TRUE(is_valid_flow(g, m));
    EXPECT_LE(flow_distance(g, m, exact), 2e-2);
    const double var = second_moment(g, m.level(g.time_steps())) / 2.0;
    EXPECT_NEAR(var, 0.25 + 2.0, 2e-2);
}

TEST(Fp, RejectsBadPolicy) {
    const auto entry = catalog_entry("example5-weak");
    const Grid g = build_grid(1, -3.0, 3.0, 31, 1.0, 10);
    const auto mu = constant_flow(entry.problem, g);
    PolicyField short_policy(3, std::vector<Vec>(g.num_nodes(), zero_vec()));
    EXPECT_THROW(solve_fp(entry.problem, g, mu, short_policy), InvalidArgument);
    PolicyField bad(g.num_levels(), std::vector<Vec>(g.num_nodes(), zero_vec()));
    bad[4][7] = Vec{NAN, 0.0};
    EXPECT_THROW(solve_fp(entry.problem, g, mu, bad), InvalidArgument);
    const Grid other = build_grid(1, -3.0, 3.0, 31, 1.0, 12);
    EXPECT_THROW(solve_fp(entry.problem, g, constant_flow(entry.problem, other)), InvalidArgument);
}

}  // namespace
}  // namespace mfg
