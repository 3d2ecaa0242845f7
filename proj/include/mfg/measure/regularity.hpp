#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/measure/density.hpp"
#include "mfg/measure/wasserstein.hpp"
#include "mfg/util/parallel.hpp"

namespace mfg {

/// Empirical membership data for the set of flows with 1/2-Hoelder time regularity in d1
/// and bounded second moments.
struct FlowRegularityReport {
    double holder_half_seminorm = 0.0;  // sup_{s != t} d1(m(s), m(t)) / |t - s|^{1/2}
    double max_second_moment = 0.0;     // sup_t int |x|^2 dm(t)
    double implied_C1 = 0.0;            // max of the two
};

/// Minimum level separation used in the Hoelder quotient.
inline constexpr std::size_t kHolderMinLevelGap = 2;

/// Computes both suprema over all level pairs at least two steps apart. The distance is
/// d1_1d in 1D and the marginal maximum in 2D, matching flow_metric.
inline FlowRegularityReport flow_regularity(const Grid& grid, const MeasureFlow& flow) {
    const std::size_t levels = flow.levels();
    const std::size_t nx = grid.nodes_per_dim();
    FlowRegularityReport report;

    // Cumulative marginal masses per level and dimension.
    std::vector<std::vector<double>> cdf(levels * grid.dim());
    for (std::size_t k = 0; k < levels; ++k) {
        validate_density(grid, flow.level(k));
        report.max_second_moment = std::max(report.max_second_moment, second_moment(grid, flow.level(k)));
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            auto masses = detail::marginal_masses(grid, flow.level(k), d);
            double acc = 0.0;
            for (double& v : masses) {
                acc += v;
                v = acc;
            }
            cdf[k * grid.dim() + d] = std::move(masses);
        }
    }

    std::vector<double> row_max(levels, 0.0);
    parallel_for(0, levels, [&](std::size_t k) {
        double best = 0.0;
        for (std::size_t l = k + kHolderMinLevelGap; l < levels; ++l) {
            double dist = 0.0;
            for (std::size_t d = 0; d < grid.dim(); ++d) {
                const auto& a = cdf[k * grid.dim() + d];
                const auto& b = cdf[l * grid.dim() + d];
                double s = 0.0;
                for (std::size_t i = 0; i + 1 < nx; ++i) s += std::abs(a[i] - b[i]);
                dist = std::max(dist, s * grid.spacing(d));
            }
            const double gap = grid.time(l) - grid.time(k);
            best = std::max(best, dist / std::sqrt(gap));
        }
        row_max[k] = best;
    });
    for (double v : row_max) report.holder_half_seminorm = std::max(report.holder_half_seminorm, v);
    report.implied_C1 = std::max(report.holder_half_seminorm, report.max_second_moment);
    return report;
}

}  // namespace mfg
