#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "support.hpp"

namespace mfg {
namespace {

constexpr std::size_t kMargin = 10;

TEST(Hjb, ConstantTerminalCostGivesConstantValue) {
    for (std::size_t dim : {1u, 2u}) {
        const auto p = test::constant_problem(dim, 0.0, 1.0, 0.0, 3.25);
        const Grid g = build_grid(dim, -3.0, 3.0, dim == 1 ? 61 : 21, 1.0, 20);
        const auto u = solve_hjb(p, g, constant_flow(p, g));
        for (double v : u.values.raw()) EXPECT_NEAR(v, 3.25, 1e-12);
        for (const auto& level : u.gradient) {
            for (const Vec& d : level) EXPECT_NEAR(norm(d), 0.0, 1e-10);
        }
    }
}

TEST(Hjb, ConstantRunningCostAccumulates) {
    const auto p = test::constant_problem(1, 0.7, 1.0, 2.0, 1.0);
    const Grid g = build_grid(1, -3.0, 3.0, 61, 1.0, 20);
    const auto u = solve_hjb(p, g, constant_flow(p, g));
    for (std::size_t k = 0; k < g.num_levels(); ++k) {
        for (double v : u.values.level(k)) EXPECT_NEAR(v, 1.0 + 2.0 * (1.0 - g.time(k)), 1e-11);
    }
}

TEST(Hjb, TerminalShiftShiftsValueProperty) {
    const auto base_entry = catalog_entry("example5-weak");
    const Grid g = build_grid(1, -5.0, 5.0, 101, 1.0, 50);
    const auto mu = constant_flow(base_entry.problem, g);
    const auto base = solve_hjb(base_entry.problem, g, mu);
    for (double c : {0.5, 3.0, 17.0}) {
        auto p = base_entry.problem;
        auto g0 = p.terminal_g;
        p.terminal_g = [g0, c](const Vec& x, const MeasureView& m) { return g0(x, m) + c; };
        const auto shifted = solve_hjb(p, g, mu);
        for (std::size_t i = 0; i < base.values.raw().size(); ++i) {
            EXPECT_NEAR(shifted.values.raw()[i] - base.values.raw()[i], c, 1e-9 * (1.0 + c));
        }
    }
}

TEST(Hjb, MaximumPrincipleSurrogate) {
    const auto entry = catalog_entry("decoupled-hopfcole");
    const Grid g = build_grid(1, -6.0, 6.0, 121, 1.0, 100);
    const auto u = solve_hjb(entry.problem, g, constant_flow(entry.problem, g));
    double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
    const Grid padded = g.padded(default_hjb_padding(entry.problem, g));
    const auto m0 = discretize_initial_density(entry.problem, g);
    const auto view = make_measure_view(g, m0);
    for (std::size_t n = 0; n < padded.num_nodes(); ++n) {
        const double v = entry.problem.terminal_g(padded.point(n), view);
        gmin = std::min(gmin, v);
        gmax = std::max(gmax, v);
    }
    for (double v : u.values.raw()) {
        EXPECT_LE(v, gmax);
        EXPECT_GE(v, gmin - 1e-8);
    }
}

TEST(Hjb, MatchesHopfColeOracle) {
    const auto entry = catalog_entry("decoupled-hopfcole");
    double previous = 0.0;
    for (int refine = 0; refine < 2; ++refine) {
        const auto gp = refine == 0 ? entry.grid : entry.grid.refined();
        const Grid g = gp.build();
        const auto u = solve_hjb(entry.problem, g, constant_flow(entry.problem, g));
        const auto exact = hopf_cole_value(catalog::hopfcole_terminal, g);
        const double err = test::interior_max_error(g, u.values, exact.values, kMargin << refine);
        if (refine == 0) {
            EXPECT_LE(err, 5e-3);
        } else {
            EXPECT_GE(previous / err, 1.8);
        }
        previous = err;
    }
}

TEST(Hjb, MatchesRiccatiOracle) {
    const auto entry = catalog_entry("lq-riccati");
    const Grid g = entry.grid.build();
    const auto u = solve_hjb(entry.problem, g, constant_flow(entry.problem, g));
    const auto exact = lq_riccati_value(entry.oracle.c, g);
    EXPECT_LE(test::interior_max_error(g, u.values, exact.values, kMargin), 1e-2);
}

TEST(Hjb, GradientSupStableUnderRefinement) {
    for (const char* name : {"decoupled-hopfcole", "example5-weak"}) {
        const auto entry = catalog_entry(name);
        const Grid g1 = entry.grid.build(), g2 = entry.grid.refined().build();
        const auto u1 = solve_hjb(entry.problem, g1, constant_flow(entry.problem, g1));
        const auto u2 = solve_hjb(entry.problem, g2, constant_flow(entry.problem, g2));
        const double s1 = test::interior_gradient_sup(g1, u1, kMargin);
        const double s2 = test::interior_gradient_sup(g2, u2, 2 * kMargin);
        EXPECT_TRUE(std::isfinite(s1));
        EXPECT_LT(std::abs(s2 - s1) / s1, 0.05) << name;
    }
}

TEST(Hjb, TwoDimensionalSeparableMatchesOneDimensional) {
    const auto e1 = catalog_entry("decoupled-hopfcole");
    const auto e2 = catalog_entry("decoupled-hopfcole-2d");
    const Grid g1 = build_grid(1, -6.0, 6.0, 61, 1.0, 100);
    const Grid g2 = build_grid(2, -6.0, 6.0, 61, 1.0, 100);
    const auto u1 = solve_hjb(e1.problem, g1, constant_flow(e1.problem, g1));
    const auto u2 = solve_hjb(e2.problem, g2, constant_flow(e2.problem, g2));
    // With G(x) = G(x1) + G(x2) the exact solution splits; the splitting error is O(dt).
    double worst = 0.0;
    for (std::size_t k = 0; k < g1.num_levels(); ++k) {
        for (std::size_t i = kMargin; i + kMargin < 61; ++i) {
            for (std::size_t j = kMargin; j + kMargin < 61; ++j) {
                const double sep = u1.values.at(k, i) + u1.values.at(k, j);
                worst = std::max(worst, std::abs(u2.values.at(k, g2.node_index(i, j)) - sep));
            }
        }
    }
    EXPECT_LT(worst, 2e-2);
}

TEST(Hjb, HybridAdvectionMoreAccurateThanUpwind) {
    const auto entry = catalog_entry("lq-riccati");
    const Grid g = entry.grid.build();
    HjbSolverConfig up;
    up.advection = AdvectionScheme::upwind;
    const auto mu = constant_flow(entry.problem, g);
    const auto exact = lq_riccati_value(entry.oracle.c, g);
    const double e_hybrid = test::interior_max_error(g, solve_hjb(entry.problem, g, mu).values, exact.values, kMargin);
    const double e_upwind = test::interior_max_error(g, solve_hjb(entry.problem, g, mu, up).values, exact.values, kMargin);
    EXPECT_LT(e_upwind, 0.1);
    EXPECT_LT(e_hybrid, e_upwind);
}

TEST(Hjb, RejectsMismatchedInput) {
    const auto entry = catalog_entry("lq-riccati");
    const Grid g = build_grid(1, -3.0, 3.0, 31, 1.0, 10);
    const Grid other = build_grid(1, -3.0, 3.0, 41, 1.0, 10);
    EXPECT_THROW(solve_hjb(entry.problem, g, constant_flow(entry.problem, other)), InvalidArgument);
    const Grid g2 = build_grid(2, -3.0, 3.0, 11, 1.0, 10);
    EXPECT_THROW(solve_hjb(entry.problem, g2, constant_flow(catalog_entry("decoupled-hopfcole-2d").problem, g2)),
                 InvalidArgument);
}

TEST(Hjb, NonFiniteTerminalCostIsASolverError) {
    auto p = test::constant_problem(1, 0.0, 1.0, 0.0, 0.0);
    p.terminal_g = [](const Vec& x, const MeasureView&) { return x[0] > 1.0 ? NAN : 0.0; };
    const Grid g = build_grid(1, -3.0, 3.0, 31, 1.0, 10);
    EXPECT_THROW(solve_hjb(p, g, constant_flow(p, g)), SolverError);
}

TEST(Hjb, ReportsPaddingAndCfl) {
    const auto entry = catalog_entry("example5-weak");
    const Grid g = entry.grid.build();
    HjbDiagnostics diag;
    solve_hjb(entry.problem, g, constant_flow(entry.problem, g), {}, &diag);
    EXPECT_EQ(diag.padding_nodes, default_hjb_padding(entry.problem, g));
    EXPECT_GT(diag.max_cfl, 0.0);
    HjbSolverConfig none;
    none.padding_nodes = 0;
    solve_hjb(entry.problem, g, constant_flow(entry.problem, g), none, &diag);
    EXPECT_EQ(diag.padding_nodes, 0u);
}

}  // namespace
}  // namespace mfg
