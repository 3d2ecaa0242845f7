#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/types.hpp"

namespace mfg {

using MeasureDrift = std::function<Vec(double t, const Vec& x, const MeasureView& m)>;
using ControlDrift = std::function<Vec(double t, const Vec& x, const Vec& alpha)>;
using DiffusionFn = std::function<Mat(double t, const Vec& x, const MeasureView& m)>;
using MeasureCost = std::function<double(double t, const Vec& x, const MeasureView& m)>;
using ControlCost = std::function<double(double t, const Vec& x, const Vec& alpha)>;
using TerminalCost = std::function<double(const Vec& x, const MeasureView& m)>;
using DensityFn = std::function<double(const Vec& x)>;
using MinimizerFn = std::function<Vec(double t, const Vec& x, const Vec& p)>;

/// Admissible controls: all of R^n, or a box searched on a uniform control grid.
struct ControlSpace {
    enum class Kind { all_of_rn, box };
    Kind kind = Kind::all_of_rn;
    Vec lower = zero_vec();
    Vec upper = zero_vec();
    std::size_t points_per_dim = 0;  // control-grid resolution for grid search

    static ControlSpace unbounded() { return {}; }
    static ControlSpace make_box(const Vec& lower, const Vec& upper, std::size_t points_per_dim) {
        return {Kind::box, lower, upper, points_per_dim};
    }
    bool bounded() const noexcept { return kind == Kind::box; }
};

/// Constants of the structural assumptions: ellipticity bracket and the common bound L.
struct AssumptionConstants {
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double lipschitz = 1.0;
};

/// A mean-field game instance.
///
/// Drift and running cost enter only through the split b = b0(t,x,m) + b1(t,x,alpha) and
/// f = f0(t,x,m) + f1(t,x,alpha). Every callback must be pure.
struct ProblemSpec {
    std::string name;
    std::size_t dim = 1;
    double horizon = 1.0;

    MeasureDrift drift_b0;
    ControlDrift drift_b1;
    DiffusionFn diffusion_sigma;
    MeasureCost running_f0;
    ControlCost running_f1;
    TerminalCost terminal_g;
    DensityFn initial_density;

    ControlSpace control_space;
    std::optional<MinimizerFn> closed_form_phi;
    AssumptionConstants constants;

    /// True when b1 = alpha and f1 = |alpha|^2 / 2, enabling analytic suboptimality gaps.
    bool quadratic_control = false;

    Vec drift(double t, const Vec& x, const MeasureView& m, const Vec& alpha) const {
        return drift_b0(t, x, m) + drift_b1(t, x, alpha);
    }
    double running_cost(double t, const Vec& x, const MeasureView& m, const Vec& alpha) const {
        return running_f0(t, x, m) + running_f1(t, x, alpha);
    }
    Mat diffusion(double t, const Vec& x, const MeasureView& m) const {
        return diffusion_tensor(diffusion_sigma(t, x, m));
    }
};

/// Throws InvalidArgument when the instance violates a structural invariant.
inline void validate_problem(const ProblemSpec& p) {
    if (p.dim < 1 || p.dim > kMaxDim) throw InvalidArgument("problem dimension must be 1 or 2");
    if (!std::isfinite(p.horizon) || p.horizon <= 0.0) throw InvalidArgument("problem horizon must be positive");
    if (!p.drift_b0 || !p.drift_b1 || !p.diffusion_sigma || !p.running_f0 || !p.running_f1 || !p.terminal_g ||
        !p.initial_density) {
        throw InvalidArgument("problem '" + p.name + "' is missing a coefficient function");
    }
    const auto& c = p.constants;
    if (!(c.gamma1 > 0.0)) throw InvalidArgument("gamma1 must be positive");
    if (!(c.gamma1 <= c.gamma2)) throw InvalidArgument("gamma1 must not exceed gamma2");
    if (!(c.lipschitz >= 0.0)) throw InvalidArgument("L must be nonnegative");
    if (p.control_space.bounded()) {
        if (p.control_space.points_per_dim < 1) throw InvalidArgument("control grid needs at least one point");
        for (std::size_t d = 0; d < p.dim; ++d) {
            if (!(p.control_space.lower[d] <= p.control_space.upper[d])) {
                throw InvalidArgument("control box has lower > upper");
            }
        }
    }
}

/// Samples m0 at the nodes and renormalizes to unit quadrature mass.
inline std::vector<double> discretize_initial_density(const ProblemSpec& p, const Grid& grid) {
    std::vector<double> m(grid.num_nodes());
    for (std::size_t n = 0; n < m.size(); ++n) {
        const double v = p.initial_density(grid.point(n));
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("initial density must be finite and nonnegative");
        m[n] = v;
    }
    const double mass = quadrature_mass(grid, m);
    if (!(mass > 0.0)) throw InvalidArgument("initial density has no mass on the grid");
    for (double& v : m) v /= mass;
    return m;
}

/// Flow equal to the discretized m0 at every level.
inline MeasureFlow constant_flow(const ProblemSpec& p, const Grid& grid) {
    const auto m0 = discretize_initial_density(p, grid);
    MeasureFlow flow(grid.num_levels(), grid.num_nodes());
    for (std::size_t k = 0; k < flow.levels(); ++k) {
        auto level = flow.level(k);
        std::copy(m0.begin(), m0.end(), level.begin());
    }
    return flow;
}

/// Precomputed views of every level of a flow.
inline std::vector<MeasureView> measure_views(const Grid& grid, const MeasureFlow& flow) {
    std::vector<MeasureView> views;
    views.reserve(flow.levels());
    for (std::size_t k = 0; k < flow.levels(); ++k) views.push_back(make_measure_view(grid, flow.level(k)));
    return views;
}

}  // namespace mfg
