#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "support.hpp"

namespace mfg {
namespace {

double sample_variance(const std::vector<Vec>& xs) {
    double m = 0.0, s = 0.0;
    for (const Vec& x : xs) m += x[0];
    m /= static_cast<double>(xs.size());
    for (const Vec& x : xs) s += (x[0] - m) * (x[0] - m);
    return s / static_cast<double>(xs.size() - 1);
}

/// Draws n points from a 1D grid density: node by its mass, then uniform within its cell.
std::vector<Vec> resample(std::mt19937_64& rng, const Grid& g, std::span<const double> density, std::size_t n) {
    std::discrete_distribution<std::size_t> pick(density.begin(), density.end());
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    std::vector<Vec> out(n);
    for (auto& x : out) x = Vec{g.coordinate(pick(rng), 0) + jitter(rng) * g.spacing(0), 0.0};
    return out;
}

TEST(Particle, FrozenDynamicsKeepParticlesInPlace) {
    const auto p = test::constant_problem(1, 0.0, 0.0, 0.0, 0.0, 0.3, 1e-6);
    const Grid g = build_grid(1, -1.0, 1.0, 201, 1.0, 50);
    const auto e = simulate(p, g, constant_flow(p, g), std::nullopt, 500, 1);
    ASSERT_EQ(e.levels.size(), g.num_levels());
    for (std::size_t r = 0; r < e.levels.size(); ++r) {
        for (std::size_t i = 0; i < 500; ++i) {
            ASSERT_EQ(e.positions[r][i], e.positions[0][i]);
            ASSERT_LE(std::abs(e.positions[r][i][0] - 0.3), 0.5 * g.spacing(0) + 1e-12);
        }
    }
    EXPECT_EQ(e.boundary_leak, 0.0);
}

TEST(Particle, UnitDriftTranslatesByTime) {
    const auto p = test::constant_problem(1, 1.0, 0.0, 0.0, 0.0, -2.0, 0.1);
    const Grid g = build_grid(1, -5.0, 5.0, 201, 1.0, 40);
    const auto e = simulate(p, g, constant_flow(p, g), std::nullopt, 1000, 2);
    for (std::size_t r = 0; r < e.levels.size(); ++r) {
        const double t = g.time(e.levels[r]);
        for (std::size_t i = 0; i < 1000; ++i) ASSERT_NEAR(e.positions[r][i][0] - e.positions[0][i][0], t, 1e-12);
    }
}

TEST(Particle, ControlEntersTheDrift) {
    auto p = test::quadratic_problem(1, 0.0, [](const Vec&, const MeasureView&) { return 0.0; });
    const Grid g = build_grid(1, -5.0, 5.0, 201, 1.0, 40);
    const PolicyFn half = [](std::size_t, double, const Vec&) { return Vec{-0.5, 0.0}; };
    const auto e = simulate(p, g, constant_flow(p, g), half, 200, 3);
    for (std::size_t i = 0; i < 200; ++i) EXPECT_NEAR(e.positions.back()[i][0] - e.positions[0][i][0], -0.5, 1e-12);
}

TEST(Particle, BrownianVarianceGrowth) {
    // Batch means over 20 seeds of 5000 paths each.
    const auto p = test::constant_problem(1, 0.0, std::numbers::sqrt2, 0.0, 0.0, 0.0, 0.25);
    const Grid g = build_grid(1, -10.0, 10.0, 401, 1.0, 100);
    const auto flow = constant_flow(p, g);
    // Uniform jitter within a cell adds h^2 / 12 to the variance of the discrete m0.
    const double var0 = second_moment(g, flow.level(0)) - std::pow(mean(g, flow.level(0))[0], 2) +
                        g.spacing(0) * g.spacing(0) / 12.0;
    SimulationConfig cfg;
    cfg.record_stride = 50;
    const std::size_t seeds = 20;
    std::vector<std::vector<double>> var(3, std::vector<double>(seeds));
    for (std::size_t s = 0; s < seeds; ++s) {
        const auto e = simulate(p, g, flow, std::nullopt, 5000, 100 + s, cfg);
        ASSERT_EQ(e.levels.size(), 3u);
        for (std::size_t r = 0; r < 3; ++r) var[r][s] = sample_variance(e.positions[r]);
    }
    for (std::size_t r = 0; r < 3; ++r) {
        double m = 0.0, sd = 0.0;
        for (double v : var[r]) m += v;
        m /= seeds;
        for (double v : var[r]) sd += (v - m) * (v - m);
        sd = std::sqrt(sd / (seeds - 1));
        const double expect = var0 + 2.0 * g.time(50 * r);
        EXPECT_LE(std::abs(m - expect), 3.0 * sd / std::sqrt(static_cast<double>(seeds))) << "t = " << g.time(50 * r);
    }
}

TEST(Particle, RecordStrideKeepsLastLevel) {
    const auto p = test::constant_problem(1, 0.0, 1.0, 0.0, 0.0);
    const Grid g = build_grid(1, -4.0, 4.0, 81, 1.0, 10);
    SimulationConfig cfg;
    cfg.record_stride = 4;
    const auto e = simulate(p, g, constant_flow(p, g), std::nullopt, 10, 5, cfg);
    EXPECT_EQ(e.levels, (std::vector<std::size_t>{0, 4, 8, 10}));
    cfg.record_stride = 0;
    EXPECT_THROW(simulate(p, g, constant_flow(p, g), std::nullopt, 10, 5, cfg), InvalidArgument);
}

TEST(Particle, SeedDeterministicAcrossThreadCounts) {
    const auto entry = catalog_entry("uncontrolled-fp");
    const Grid g = build_grid(1, -6.0, 6.0, 121, 1.0, 50);
    const auto flow = constant_flow(entry.problem, g);
    const char* old = std::getenv("MFG_THREADS");
    const std::string saved = old ? old : "";
    setenv("MFG_THREADS", "1", 1);
    const auto a = simulate(entry.problem, g, flow, std::nullopt, 3000, 77);
    const auto la = simulate_and_compare(entry.problem, g, flow, std::nullopt, 3000, 77);
    setenv("MFG_THREADS", "4", 1);
    const auto b = simulate(entry.problem, g, flow, std::nullopt, 3000, 77);
    const auto lb = simulate_and_compare(entry.problem, g, flow, std::nullopt, 3000, 77);
    if (old) {
        setenv("MFG_THREADS", saved.c_str(), 1);
    } else {
        unsetenv("MFG_THREADS");
    }
    EXPECT_EQ(a.positions, b.positions);
    EXPECT_EQ(la.d1, lb.d1);
    const auto c = simulate(entry.problem, g, flow, std::nullopt, 3000, 78);
    EXPECT_NE(a.positions.back(), c.positions.back());
}

TEST(Particle, StreamingComparisonMatchesStoredEnsemble) {
    const auto entry = catalog_entry("uncontrolled-fp");
    const Grid g = build_grid(1, -6.0, 6.0, 121, 1.0, 50);
    const auto flow = solve_fp(entry.problem, g, constant_flow(entry.problem, g));
    const auto e = simulate(entry.problem, g, flow, std::nullopt, 4000, 9);
    const auto stored = compare_law(e, flow, g);
    ParticleEnsemble summary;
    const auto streamed = simulate_and_compare(entry.problem, g, flow, std::nullopt, 4000, 9, 1, &summary);
    EXPECT_EQ(stored.levels, streamed.levels);
    for (std::size_t r = 0; r < stored.d1.size(); ++r) EXPECT_NEAR(stored.d1[r], streamed.d1[r], 1e-12);
    EXPECT_EQ(summary.max_abs_position, e.max_abs_position);
}

TEST(Particle, ResamplingOracle) {
    const auto entry = catalog_entry("heat");
    const Grid g = build_grid(1, -8.0, 8.0, 161, 1.0, 50);
    const auto flow = heat_flow_density({zero_vec(), 0.25}, std::numbers::sqrt2, g);
    std::mt19937_64 rng(2718);
    const std::size_t n = 20000;
    ParticleEnsemble e;
    e.n_particles = n;
    double floor = 0.0;
    for (std::size_t k = 0; k < g.num_levels(); k += 10) {
        e.levels.push_back(k);
        e.positions.push_back(resample(rng, g, flow.level(k), n));
        const auto a = histogram_density(resample(rng, g, flow.level(k), n), g);
        const auto b = histogram_density(resample(rng, g, flow.level(k), n), g);
        floor = std::max(floor, d1_1d(g, a.density, b.density));
    }
    const auto cmp = compare_law(e, flow, g);
    EXPECT_GT(floor, 0.0);
    EXPECT_LE(cmp.max_d1, 3.0 * floor);
}

TEST(Particle, HeatInstanceMatchesFokkerPlanck) {
    const auto entry = catalog_entry("heat");
    const Grid g = entry.grid.build();
    const auto flow = solve_fp(entry.problem, g, constant_flow(entry.problem, g));
    ParticleEnsemble summary;
    const auto cmp = simulate_and_compare(entry.problem, g, flow, std::nullopt, 100000, 20240607, 1, &summary);
    EXPECT_LE(cmp.max_d1, 5e-2);
    EXPECT_FALSE(summary.leak_warning);
    EXPECT_EQ(cmp.levels.size(), g.num_levels());
}

TEST(Particle, SingleParticleDistanceIsPointMassDistance) {
    const auto entry = catalog_entry("heat");
    const Grid g = build_grid(1, -8.0, 8.0, 161, 1.0, 20);
    const auto flow = heat_flow_density({zero_vec(), 0.25}, std::numbers::sqrt2, g);
    const auto e = simulate(entry.problem, g, flow, std::nullopt, 1, 4);
    const auto cmp = compare_law(e, flow, g);
    std::vector<double> xs(g.num_nodes()), ws(g.num_nodes());
    for (std::size_t n = 0; n < g.num_nodes(); ++n) xs[n] = g.coordinate(n, 0);
    for (std::size_t r = 0; r < e.levels.size(); ++r) {
        const double node = std::round((e.positions[r][0][0] - g.x_min(0)) / g.spacing(0));
        const std::vector<double> x1{g.coordinate(static_cast<std::size_t>(node), 0)}, w1{1.0};
        for (std::size_t n = 0; n < g.num_nodes(); ++n) ws[n] = flow.at(e.levels[r], n) * g.spacing(0);
        EXPECT_NEAR(cmp.d1[r], d1_1d(x1, w1, xs, ws), 1e-9);
        EXPECT_TRUE(std::isfinite(cmp.d1[r]));
    }
}

TEST(Particle, LeavingTheBoxIsClampedAndCounted) {
    const auto p = test::constant_problem(1, 5.0, 0.1, 0.0, 0.0, 0.0, 0.01);
    const Grid g = build_grid(1, -1.0, 1.0, 41, 1.0, 20);
    const auto e = simulate(p, g, constant_flow(p, g), std::nullopt, 100, 6);
    EXPECT_TRUE(e.leak_warning);
    EXPECT_GT(e.boundary_leak, 0.5);
    for (const Vec& x : e.positions.back()) EXPECT_LE(x[0], 1.0);
}

TEST(Particle, TwoDimensionalInitialLaw) {
    const auto entry = catalog_entry("decoupled-hopfcole-2d");
    const Grid g = build_grid(2, -3.0, 3.0, 41, 1.0, 1);
    const auto flow = constant_flow(entry.problem, g);
    InitialSampler sampler(entry.problem, g, 12);
    std::vector<Vec> pts(40000);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = sampler(i);
    const auto hist = histogram_density(pts, g);
    EXPECT_LT(flow_metric(g, hist.density, flow.level(0)), 2e-2);
    EXPECT_EQ(sampler(17), sampler(17));
}

TEST(Particle, MonteCarloRateOnHeatInstance) {
    const auto entry = catalog_entry("heat");
    const Grid g = entry.grid.build();
    const auto flow = solve_fp(entry.problem, g, constant_flow(entry.problem, g));
    const auto st = particle_scaling(entry.problem, g, flow, std::nullopt, {1000, 10000, 100000}, 4, 20240607);
    EXPECT_GE(st.slope, -0.65);
    EXPECT_LE(st.slope, -0.35);
    EXPECT_GT(st.mean_max_d1[0], st.mean_max_d1[2]);
}

TEST(Particle, LogLogSlopeOfPowerLaw) {
    const std::vector<std::size_t> n{10, 100, 1000};
    const std::vector<double> y{3.0 / std::sqrt(10.0), 3.0 / std::sqrt(100.0), 3.0 / std::sqrt(1000.0)};
    EXPECT_NEAR(log_log_slope(n, y), -0.5, 1e-12);
    EXPECT_THROW(log_log_slope(std::vector<std::size_t>{10}, std::vector<double>{1.0}), InvalidArgument);
    EXPECT_NE(replicate_seed(1, 0), replicate_seed(1, 1));
}

}  // namespace
}  // namespace mfg
