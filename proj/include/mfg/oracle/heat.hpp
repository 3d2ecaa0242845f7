#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

/// Isotropic Gaussian initial law.
struct GaussianParams {
    Vec mean = zero_vec();
    double variance = 1.0;
};

/// Mass the Gaussian may lose to the box edges before the oracle refuses the grid.
inline constexpr double kHeatNormalizationTol = 1e-6;

/// Gaussian density N(mean, variance I) at the nodes, unnormalized quadrature mass returned.
inline double sample_gaussian(const Grid& grid, const Vec& mean, double variance, std::span<double> out) {
    const double dim = static_cast<double>(grid.dim());
    const double norm = std::pow(2.0 * std::numbers::pi * variance, -0.5 * dim);
    double mass = 0.0;
    for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
        const Vec x = grid.point(n);
        double r2 = 0.0;
        for (std::size_t d = 0; d < grid.dim(); ++d) r2 += (x[d] - mean[d]) * (x[d] - mean[d]);
        out[n] = norm * std::exp(-0.5 * r2 / variance);
        mass += out[n];
    }
    return mass * grid.cell_volume();
}

/// Law of X_t for dX = sigma dW, X_0 ~ N(mean, var0): N(mean, var0 + sigma^2 t), sampled on
/// the grid and renormalized. Throws OracleValidationError if a level lost more than
/// 1e-6 of its mass to the box.
inline MeasureFlow heat_flow_density(const GaussianParams& m0, double sigma, const Grid& grid) {
    if (!(m0.variance > 0.0)) throw InvalidArgument("Gaussian variance must be positive");
    if (!std::isfinite(sigma)) throw InvalidArgument("sigma must be finite");
    MeasureFlow flow(grid.num_levels(), grid.num_nodes());
    for (std::size_t k = 0; k < grid.num_levels(); ++k) {
        const double var = m0.variance + sigma * sigma * grid.time(k);
        auto level = flow.level(k);
        const double mass = sample_gaussian(grid, m0.mean, var, level);
        if (!(std::abs(mass - 1.0) <= kHeatNormalizationTol)) {
            throw OracleValidationError("heat oracle: Gaussian mass " + std::to_string(mass) + " at level " +
                                        std::to_string(k) + " is not contained in the box");
        }
        for (double& v : level) v /= mass;
    }
    return flow;
}

}  // namespace mfg
