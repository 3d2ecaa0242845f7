#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

/// Box and resolution of a catalog instance.
struct GridParams {
    std::size_t dim = 1;
    Vec x_min = {-6.0, -6.0};
    Vec x_max = {6.0, 6.0};
    std::size_t nodes_per_dim = 241;
    std::size_t time_steps = 400;
    double horizon = 1.0;

    Grid build() const { return build_grid(dim, x_min, x_max, nodes_per_dim, horizon, time_steps); }

    /// Same box with h and dt halved.
    GridParams refined() const {
        GridParams g = *this;
        g.nodes_per_dim = 2 * (nodes_per_dim - 1) + 1;
        g.time_steps = 2 * time_steps;
        return g;
    }
};

/// Analytic reference available for an instance.
struct OracleInfo {
    enum class Kind { none, hopf_cole, riccati, heat };
    Kind kind = Kind::none;
    double c = 0.0;          // Riccati curvature
    double variance0 = 0.0;  // heat: initial variance
    double sigma = 0.0;      // heat: diffusion
};

struct CatalogEntry {
    std::string name;
    std::string description;
    ProblemSpec problem;
    GridParams grid;
    bool decoupled = false;   // no coefficient depends on the measure
    bool controlled = true;   // false when b1 and f1 vanish
    OracleInfo oracle;
};

namespace catalog {

inline double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Smooth minimum b - eps softplus((b - a) / eps).
inline double smooth_min(double a, double b, double eps) noexcept { return b - eps * softplus((b - a) / eps); }

inline constexpr double kCapLevel = 25.0;
inline constexpr double kCapWidth = 5.0;

/// Terminal cost of the Hopf-Cole instance: (smin(x^2, 25) - smin(0, 25)) / 2, a quadratic
/// near the origin that levels off smoothly, vanishing at 0.
inline double hopfcole_terminal(double x) noexcept {
    return 0.5 * (smooth_min(x * x, kCapLevel, kCapWidth) - smooth_min(0.0, kCapLevel, kCapWidth));
}

inline double gaussian_density(const Vec& x, const Vec& mean, double variance, std::size_t dim) noexcept {
    double r2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) r2 += (x[d] - mean[d]) * (x[d] - mean[d]);
    return std::exp(-0.5 * r2 / variance) / std::pow(2.0 * std::numbers::pi * variance, 0.5 * static_cast<double>(dim));
}

inline Mat constant_sigma(double s, std::size_t dim) noexcept { return scaled_identity(s, dim); }

/// Fills b1 = alpha, f1 = |alpha|^2 / 2, phi = -p.
inline void set_quadratic_control(ProblemSpec& p) {
    p.drift_b1 = [](double, const Vec&, const Vec& alpha) { return alpha; };
    p.running_f1 = [](double, const Vec&, const Vec& alpha) { return 0.5 * dot(alpha, alpha); };
    p.closed_form_phi = MinimizerFn([](double, const Vec&, const Vec& p) { return -p; });
    p.control_space = ControlSpace::unbounded();
    p.quadratic_control = true;
}

inline void set_no_control(ProblemSpec& p) {
    p.drift_b1 = [](double, const Vec&, const Vec&) { return zero_vec(); };
    p.running_f1 = [](double, const Vec&, const Vec&) { return 0.0; };
    p.closed_form_phi = MinimizerFn([](double, const Vec&, const Vec&) { return zero_vec(); });
}

}  // namespace catalog

/// B = 0, sigma = sqrt(2), F = 0, capped quadratic G; decoupled. In 2D the terminal cost
/// is G(x1) + G(x2).
inline CatalogEntry make_decoupled_hopfcole(std::size_t dim = 1) {
    CatalogEntry e;
    e.name = dim == 1 ? "decoupled-hopfcole" : "decoupled-hopfcole-2d";
    e.description = "B=0, sigma=sqrt(2), F=0, smoothly capped quadratic G; Hopf-Cole oracle instance";
    e.decoupled = true;
    e.oracle.kind = OracleInfo::Kind::hopf_cole;
    auto& p = e.problem;
    p.name = e.name;
    p.dim = dim;
    p.horizon = 1.0;
    p.drift_b0 = [](double, const Vec&, const MeasureView&) { return zero_vec(); };
    p.diffusion_sigma = [dim](double, const Vec&, const MeasureView&) {
        return catalog::constant_sigma(std::numbers::sqrt2, dim);
    };
    p.running_f0 = [](double, const Vec&, const MeasureView&) { return 0.0; };
    p.terminal_g = [dim](const Vec& x, const MeasureView&) {
        double g = 0.0;
        for (std::size_t d = 0; d < dim; ++d) g += catalog::hopfcole_terminal(x[d]);
        return g;
    };
    p.initial_density = [dim](const Vec& x) { return catalog::gaussian_density(x, zero_vec(), 0.25, dim); };
    catalog::set_quadratic_control(p);
    p.constants = {1.0, 1.0, 20.0};
    e.grid.dim = dim;
    if (dim == 2) {
        e.grid.nodes_per_dim = 61;
        e.grid.time_steps = 100;
    }
    return e;
}

/// G = c x^2, sigma = sqrt(2), F = 0, B = 0; the value function is a(t) x^2 + d(t).
inline CatalogEntry make_lq_riccati(double c = 0.5) {
    CatalogEntry e;
    e.name = "lq-riccati";
    e.description = "1D, sigma=sqrt(2), G = c x^2 (c = " + std::to_string(c) + "), F=0, B=0; Riccati oracle instance";
    e.decoupled = true;
    e.oracle.kind = OracleInfo::Kind::riccati;
    e.oracle.c = c;
    auto& p = e.problem;
    p.name = e.name;
    p.dim = 1;
    p.horizon = 1.0;
    p.drift_b0 = [](double, const Vec&, const MeasureView&) { return zero_vec(); };
    p.diffusion_sigma = [](double, const Vec&, const MeasureView&) { return catalog::constant_sigma(std::numbers::sqrt2, 1); };
    p.running_f0 = [](double, const Vec&, const MeasureView&) { return 0.0; };
    p.terminal_g = [c](const Vec& x, const MeasureView&) { return c * x[0] * x[0]; };
    p.initial_density = [](const Vec& x) { return catalog::gaussian_density(x, zero_vec(), 0.25, 1); };
    catalog::set_quadratic_control(p);
    p.constants = {1.0, 1.0, 40.0};
    return e;
}

/// b = 0.3 tanh(mean(m) - x) + alpha, f = |alpha|^2 / 2 + kappa (x - mean)^2 / (1 + (x - mean)^2 / 4),
/// G = 2 (1 - exp(-(x - 1)^2 / 4)), sigma = 1, m0 = N(-0.5, 0.09).
inline CatalogEntry make_example5_weak(double kappa = 0.1) {
    CatalogEntry e;
    e.name = "example5-weak";
    e.description = "quadratic control with weak mean-field coupling through the mean in drift and running cost";
    auto& p = e.problem;
    p.name = e.name;
    p.dim = 1;
    p.horizon = 1.0;
    p.drift_b0 = [](double, const Vec& x, const MeasureView& m) { return Vec{0.3 * std::tanh(m.mean[0] - x[0]), 0.0}; };
    p.diffusion_sigma = [](double, const Vec&, const MeasureView&) { return catalog::constant_sigma(1.0, 1); };
    p.running_f0 = [kappa](double, const Vec& x, const MeasureView& m) {
        const double r2 = (x[0] - m.mean[0]) * (x[0] - m.mean[0]);
        return kappa * r2 / (1.0 + 0.25 * r2);
    };
    p.terminal_g = [](const Vec& x, const MeasureView&) {
        return 2.0 * (1.0 - std::exp(-0.25 * (x[0] - 1.0) * (x[0] - 1.0)));
    };
    p.initial_density = [](const Vec& x) { return catalog::gaussian_density(x, Vec{-0.5, 0.0}, 0.09, 1); };
    catalog::set_quadratic_control(p);
    p.constants = {0.5, 0.5, 4.0};
    return e;
}

/// b = tanh(1 - x) + 0.5 tanh(mean(m) - x), sigma = 1, no control, no costs, m0 = N(-1, 0.25).
inline CatalogEntry make_uncontrolled_fp() {
    CatalogEntry e;
    e.name = "uncontrolled-fp";
    e.description = "bounded mean-field drift, sigma=1, no control; exercises the Fokker-Planck equation alone";
    e.controlled = false;
    auto& p = e.problem;
    p.name = e.name;
    p.dim = 1;
    p.horizon = 1.0;
    p.drift_b0 = [](double, const Vec& x, const MeasureView& m) {
        return Vec{std::tanh(1.0 - x[0]) + 0.5 * std::tanh(m.mean[0] - x[0]), 0.0};
    };
    p.diffusion_sigma = [](double, const Vec&, const MeasureView&) { return catalog::constant_sigma(1.0, 1); };
    p.running_f0 = [](double, const Vec&, const MeasureView&) { return 0.0; };
    p.terminal_g = [](const Vec&, const MeasureView&) { return 0.0; };
    p.initial_density = [](const Vec& x) { return catalog::gaussian_density(x, Vec{-1.0, 0.0}, 0.25, 1); };
    catalog::set_no_control(p);
    p.constants = {0.5, 0.5, 4.0};
    return e;
}

/// Pure diffusion dX = sigma dW from a Gaussian; the law is Gaussian with growing variance.
inline CatalogEntry make_heat(double variance0 = 0.25, double sigma = std::numbers::sqrt2, std::size_t dim = 1) {
    CatalogEntry e;
    e.name = dim == 1 ? "heat" : "heat-2d";
    e.description = "b=0, constant sigma, Gaussian m0, no costs; heat-kernel oracle instance";
    e.decoupled = true;
    e.controlled = false;
    e.oracle = {OracleInfo::Kind::heat, 0.0, variance0, sigma};
    auto& p = e.problem;
    p.name = e.name;
    p.dim = dim;
    p.horizon = 1.0;
    p.drift_b0 = [](double, const Vec&, const MeasureView&) { return zero_vec(); };
    p.diffusion_sigma = [sigma, dim](double, const Vec&, const MeasureView&) { return catalog::constant_sigma(sigma, dim); };
    p.running_f0 = [](double, const Vec&, const MeasureView&) { return 0.0; };
    p.terminal_g = [](const Vec&, const MeasureView&) { return 0.0; };
    p.initial_density = [variance0, dim](const Vec& x) { return catalog::gaussian_density(x, zero_vec(), variance0, dim); };
    catalog::set_no_control(p);
    const double a = 0.5 * sigma * sigma;
    p.constants = {a, a, 4.0};
    e.grid.dim = dim;
    e.grid.x_min = {-8.0, -8.0};
    e.grid.x_max = {8.0, 8.0};
    e.grid.nodes_per_dim = dim == 1 ? 321 : 81;
    e.grid.time_steps = dim == 1 ? 500 : 100;
    return e;
}

/// Names accepted by catalog_entry, in listing order.
inline std::vector<std::string> catalog_names() {
    return {"decoupled-hopfcole", "lq-riccati", "example5-weak", "uncontrolled-fp", "decoupled-hopfcole-2d", "heat"};
}

inline CatalogEntry catalog_entry(const std::string& name) {
    if (name == "decoupled-hopfcole") return make_decoupled_hopfcole(1);
    if (name == "decoupled-hopfcole-2d") return make_decoupled_hopfcole(2);
    if (name == "lq-riccati") return make_lq_riccati();
    if (name == "example5-weak") return make_example5_weak();
    if (name == "uncontrolled-fp") return make_uncontrolled_fp();
    if (name == "heat") return make_heat();
    throw ConfigError("unknown catalog problem '" + name + "'");
}

}  // namespace mfg
