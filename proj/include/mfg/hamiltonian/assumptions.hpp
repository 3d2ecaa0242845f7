#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/core/types.hpp"
#include "mfg/hamiltonian/hamiltonian.hpp"
#include "mfg/measure/density.hpp"
#include "mfg/measure/wasserstein.hpp"
#include "mfg/util/parallel.hpp"
#include "mfg/util/philox.hpp"

namespace mfg {

/// Outcome of one sampled sub-check, e.g. "B3:f-growth".
struct AssumptionCheck {
    std::string id;
    std::string description;
    bool checked = true;
    bool passed = true;
    double worst_value = 0.0;  // largest sampled left-hand side
    double bound = 0.0;        // right-hand side it is compared with
    double margin = 0.0;       // bound - worst_value; negative means violated
    std::string violation;     // the worst violating sample, empty when passed
};

/// Sampled evidence for the structural assumptions. "Passed" means no violation was found
/// over n_samples draws, not that the assumption holds.
struct AssumptionReport {
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<AssumptionCheck> checks;
    double ellipticity_min = 0.0;  // smallest eigenvalue of a seen
    double ellipticity_max = 0.0;  // largest eigenvalue of a seen
    double phi_lipschitz_estimate = 0.0;  // largest |d phi / d p| seen (closed form only)
    bool phi_checked = false;

    bool all_passed() const noexcept {
        return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return !c.checked || c.passed; });
    }
    const AssumptionCheck* find(const std::string& id) const noexcept {
        for (const auto& c : checks) {
            if (c.id == id) return &c;
        }
        return nullptr;
    }
};

namespace detail {

inline constexpr double kFdRelStep = 1e-4;
// Slack for round-off and finite-difference noise when comparing against a bound.
inline constexpr double kCheckRelTol = 1e-8;

inline double fd_step(double arg_magnitude) noexcept { return kFdRelStep * (1.0 + arg_magnitude); }

inline std::pair<double, double> sym_eigenvalues(const Mat& a, std::size_t dim) noexcept {
    if (dim == 1) return {a[0][0], a[0][0]};
    const double half_tr = 0.5 * (a[0][0] + a[1][1]);
    const double off = 0.5 * (a[0][1] + a[1][0]);
    const double r = std::sqrt(0.25 * (a[0][0] - a[1][1]) * (a[0][0] - a[1][1]) + off * off);
    return {half_tr - r, half_tr + r};
}

// Largest singular value of a 2x2 (or leading 1x1) matrix.
inline double operator_norm(const Mat& j, std::size_t dim) noexcept {
    if (dim == 1) return std::abs(j[0][0]);
    Mat g = zero_mat();
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) g[r][c] = j[0][r] * j[0][c] + j[1][r] * j[1][c];
    return std::sqrt(std::max(0.0, sym_eigenvalues(g, 2).second));
}

inline double max_abs_diff(const Mat& a, const Mat& b, std::size_t dim) noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
    return m;
}

inline double max_abs_diff(const Vec& a, const Vec& b, std::size_t dim) noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < dim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline Vec unit(std::size_t i) noexcept {
    Vec e = zero_vec();
    e[i] = 1.0;
    return e;
}

enum CheckIndex : std::size_t {
    kB2Min,
    kB2Max,
    kB3A,
    kB3BGrowth,
    kB3BX,
    kB3BAlpha,
    kB3FGrowth,
    kB3FAlpha,
    kB4A,
    kB4B,
    kB4F,
    kB4G,
    kB5G,
    kB7Growth,
    kB7X,
    kB7P,
    kNumChecks
};

struct AssumptionSample {
    double t = 0.0;
    Vec x = zero_vec();
    Vec alpha = zero_vec();
    Vec p = zero_vec();
    Vec dir = zero_vec();  // unit direction for x perturbations
    std::size_t measure = 0;
};

inline std::string describe(const AssumptionSample& s, std::size_t index, std::size_t dim) {
    std::ostringstream os;
    os.precision(6);
    auto vec = [&](const Vec& v) {
        os << '(' << v[0];
        if (dim == 2) os << ", " << v[1];
        os << ')';
    };
    os << "sample " << index << ": t=" << s.t << ", x=";
    vec(s.x);
    os << ", alpha=";
    vec(s.alpha);
    os << ", p=";
    vec(s.p);
    os << ", measure #" << s.measure;
    return os.str();
}

}  // namespace detail

/// Samples random (t, x, m, alpha, p) tuples and checks the structural assumptions on
/// `problem` by direct evaluation and central finite differences.
///
/// Measure slices come from a small pool of Gaussians discretized on `grid`; measure
/// perturbations mix in a neighbouring pool member. Lipschitz quotients perturb one argument
/// at a time, each of which the joint inequality implies. Results depend only on `seed`.
inline AssumptionReport check_assumptions(const ProblemSpec& problem, const Grid& grid, std::size_t n_samples,
                                          std::uint64_t seed) {
    using namespace detail;
    if (n_samples < 1) throw InvalidArgument("check_assumptions needs at least one sample");
    if (problem.dim != grid.dim()) throw InvalidArgument("problem and grid dimensions differ");
    const std::size_t dim = problem.dim;
    const double T = problem.horizon;
    const double L = problem.constants.lipschitz;
    const Philox4x32 gen(seed);

    // Pool of measure slices and their perturbations.
    constexpr std::size_t kPool = 8;
    constexpr double kMix = 1e-3;
    std::vector<std::vector<double>> pool(kPool), mixed(kPool);
    std::vector<MeasureView> views(kPool), mixed_views(kPool);
    std::vector<double> mix_dist(kPool);
    for (std::size_t j = 0; j < kPool; ++j) {
        RandomStream rs(gen, StreamTag::assumption_sample, j, 1);
        Vec centre = zero_vec(), sd = zero_vec();
        for (std::size_t d = 0; d < dim; ++d) {
            const double w = grid.x_max(d) - grid.x_min(d);
            centre[d] = grid.x_min(d) + w * rs.uniform(0.25, 0.75);
            sd[d] = w * rs.uniform(0.05, 0.2);
        }
        auto& m = pool[j];
        m.resize(grid.num_nodes());
        for (std::size_t n = 0; n < m.size(); ++n) {
            const Vec y = grid.point(n);
            double e = 0.0;
            for (std::size_t d = 0; d < dim; ++d) e += (y[d] - centre[d]) * (y[d] - centre[d]) / (2.0 * sd[d] * sd[d]);
            m[n] = std::exp(-e);
        }
        const double mass = quadrature_mass(grid, m);
        for (double& v : m) v /= mass;
    }
    for (std::size_t j = 0; j < kPool; ++j) {
        const auto& other = pool[(j + 1) % kPool];
        mixed[j].resize(grid.num_nodes());
        for (std::size_t n = 0; n < mixed[j].size(); ++n) mixed[j][n] = (1.0 - kMix) * pool[j][n] + kMix * other[n];
        views[j] = make_measure_view(grid, pool[j]);
        mixed_views[j] = make_measure_view(grid, mixed[j]);
        mix_dist[j] = flow_metric(grid, pool[j], mixed[j]);
    }

    const bool closed_form = static_cast<bool>(problem.closed_form_phi);
    const std::size_t nan_check = kNumChecks;
    std::vector<std::array<double, kNumChecks>> values(n_samples);
    std::vector<AssumptionSample> samples(n_samples);

    parallel_for(0, n_samples, [&](std::size_t i) {
        RandomStream rs(gen, StreamTag::assumption_sample, i, 0);
        AssumptionSample s;
        s.t = rs.uniform(0.0, T);
        for (std::size_t d = 0; d < dim; ++d) {
            s.x[d] = rs.uniform(grid.x_min(d), grid.x_max(d));
            s.alpha[d] = 2.0 * rs.normal();
            s.p[d] = 2.0 * rs.normal();
            s.dir[d] = rs.normal();
        }
        const double dn = norm(s.dir);
        s.dir = dn > 0.0 ? (1.0 / dn) * s.dir : unit(0);
        s.measure = std::min(kPool - 1, static_cast<std::size_t>(rs.uniform() * kPool));
        samples[i] = s;

        const MeasureView& m = views[s.measure];
        const MeasureView& m2 = mixed_views[s.measure];
        const double dm = mix_dist[s.measure];
        const double t = s.t;
        const Vec x = s.x;
        const Vec al = s.alpha;
        const double hx = fd_step(norm(x));
        const double ha = fd_step(norm(al));
        const double ht = fd_step(t);
        const double t2 = t + ht <= T ? t + ht : t - ht;
        const double sqrt_dt = std::sqrt(std::abs(t2 - t));
        auto& v = values[i];
        v.fill(0.0);

        // (B2) ellipticity of a = sigma sigma^T / 2.
        const Mat a = problem.diffusion(t, x, m);
        const auto [lmin, lmax] = sym_eigenvalues(a, dim);
        v[kB2Min] = lmin;
        v[kB2Max] = lmax;

        // (B3) bounds on a and its x-derivatives.
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                const Vec er = hx * unit(r);
                const Vec ec = hx * unit(c);
                const double d1 =
                    (problem.diffusion(t, x + er, m)[r][c] - problem.diffusion(t, x - er, m)[r][c]) / (2.0 * hx);
                double d2;
                if (r == c) {
                    d2 = (problem.diffusion(t, x + er, m)[r][c] - 2.0 * a[r][c] + problem.diffusion(t, x - er, m)[r][c]) /
                         (hx * hx);
                } else {
                    d2 = (problem.diffusion(t, x + er + ec, m)[r][c] - problem.diffusion(t, x + er - ec, m)[r][c] -
                          problem.diffusion(t, x - er + ec, m)[r][c] + problem.diffusion(t, x - er - ec, m)[r][c]) /
                         (4.0 * hx * hx);
                }
                v[kB3A] = std::max(v[kB3A], std::abs(a[r][c]) + std::abs(d1) + std::abs(d2));
            }
        }

        // (B3) growth of b and f in alpha.
        const Vec b = problem.drift(t, x, m, al);
        v[kB3BGrowth] = norm(b) / (1.0 + norm(al));
        for (std::size_t r = 0; r < dim; ++r) {
            const Vec er = hx * unit(r);
            const double dbx = (problem.drift(t, x + er, m, al)[r] - problem.drift(t, x - er, m, al)[r]) / (2.0 * hx);
            v[kB3BX] = std::max(v[kB3BX], std::abs(dbx) / (1.0 + norm(al)));
            Vec grad = zero_vec();
            for (std::size_t c = 0; c < dim; ++c) {
                const Vec ec = ha * unit(c);
                grad[c] = (problem.drift(t, x, m, al + ec)[r] - problem.drift(t, x, m, al - ec)[r]) / (2.0 * ha);
            }
            v[kB3BAlpha] = std::max(v[kB3BAlpha], norm(grad));
        }
        const double f = problem.running_cost(t, x, m, al);
        v[kB3FGrowth] = std::abs(f) / (1.0 + dot(al, al));
        Vec fgrad = zero_vec();
        for (std::size_t c = 0; c < dim; ++c) {
            const Vec ec = ha * unit(c);
            fgrad[c] = (problem.running_cost(t, x, m, al + ec) - problem.running_cost(t, x, m, al - ec)) / (2.0 * ha);
        }
        v[kB3FAlpha] = norm(fgrad) / (1.0 + norm(al));

        // (B4) one-argument Lipschitz / Hoelder quotients.
        const Vec x2 = x + hx * s.dir;
        const Vec al2 = al + ha * s.dir;
        const double dal = norm(al2 - al);
        const double dx = norm(x2 - x);
        {
            double q = max_abs_diff(problem.diffusion(t2, x, m), a, dim) / sqrt_dt;
            q = std::max(q, max_abs_diff(problem.diffusion(t, x2, m), a, dim) / dx);
            if (dm > 0.0) q = std::max(q, max_abs_diff(problem.diffusion(t, x, m2), a, dim) / dm);
            v[kB4A] = q;
        }
        {
            double q = max_abs_diff(problem.drift(t2, x, m, al), b, dim) / sqrt_dt;
            q = std::max(q, max_abs_diff(problem.drift(t, x2, m, al), b, dim) / dx);
            if (dm > 0.0) q = std::max(q, max_abs_diff(problem.drift(t, x, m2, al), b, dim) / dm);
            q = std::max(q, max_abs_diff(problem.drift(t, x, m, al2), b, dim) / dal);
            v[kB4B] = q;
        }
        {
            double q = std::abs(problem.running_cost(t2, x, m, al) - f) / sqrt_dt;
            q = std::max(q, std::abs(problem.running_cost(t, x2, m, al) - f) / dx);
            if (dm > 0.0) q = std::max(q, std::abs(problem.running_cost(t, x, m2, al) - f) / dm);
            q = std::max(q, std::abs(problem.running_cost(t, x, m, al2) - f) /
                                ((1.0 + norm(al) + norm(al2)) * dal));
            v[kB4F] = q;
        }
        const double g = problem.terminal_g(x, m);
        {
            double q = std::abs(problem.terminal_g(x2, m) - g) / dx;
            if (dm > 0.0) q = std::max(q, std::abs(problem.terminal_g(x, m2) - g) / dm);
            v[kB4G] = q;
        }

        // (B5) sup|g| + sup|Dg|, the C^1 part of the Hoelder norm.
        Vec dg = zero_vec();
        for (std::size_t r = 0; r < dim; ++r) {
            const Vec er = hx * unit(r);
            dg[r] = (problem.terminal_g(x + er, m) - problem.terminal_g(x - er, m)) / (2.0 * hx);
        }
        v[kB5G] = std::abs(g) + norm(dg);

        // (B7) growth and derivative bounds of phi.
        if (closed_form) {
            const auto& phi = *problem.closed_form_phi;
            const Vec p = s.p;
            const double hp = fd_step(norm(p));
            v[kB7Growth] = norm(phi(t, x, p)) / (1.0 + norm(p));
            for (std::size_t r = 0; r < dim; ++r) {
                const Vec er = hx * unit(r);
                const Vec dphi = (1.0 / (2.0 * hx)) * (phi(t, x + er, p) - phi(t, x - er, p));
                v[kB7X] = std::max(v[kB7X], norm(dphi) / (1.0 + norm(p)));
            }
            Mat jac = zero_mat();
            for (std::size_t c = 0; c < dim; ++c) {
                const Vec ec = hp * unit(c);
                const Vec col = (1.0 / (2.0 * hp)) * (phi(t, x, p + ec) - phi(t, x, p - ec));
                for (std::size_t r = 0; r < dim; ++r) jac[r][c] = col[r];
            }
            v[kB7P] = operator_norm(jac, dim);
        }
        for (std::size_t c = 0; c < nan_check; ++c) {
            if (!std::isfinite(v[c])) v[c] = std::numeric_limits<double>::infinity();
        }
    });

    AssumptionReport report;
    report.n_samples = n_samples;
    report.seed = seed;
    report.phi_checked = closed_form;

    auto reduce_max = [&](std::size_t idx, double bound, const char* id, const char* what) {
        AssumptionCheck c;
        c.id = id;
        c.description = what;
        c.bound = bound;
        std::size_t worst = 0;
        c.worst_value = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_samples; ++i) {
            if (values[i][idx] > c.worst_value) {
                c.worst_value = values[i][idx];
                worst = i;
            }
        }
        c.margin = bound - c.worst_value;
        c.passed = c.margin >= -kCheckRelTol * std::max(1.0, std::abs(bound));
        if (!c.passed) c.violation = describe(samples[worst], worst, dim);
        report.checks.push_back(std::move(c));
    };

    {
        AssumptionCheck c;
        c.id = "B2:ellipticity";
        c.description = "gamma1 |xi|^2 <= a(t,x,m) xi.xi <= gamma2 |xi|^2";
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        std::size_t wlo = 0, whi = 0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            if (values[i][kB2Min] < lo) lo = values[i][kB2Min], wlo = i;
            if (values[i][kB2Max] > hi) hi = values[i][kB2Max], whi = i;
        }
        report.ellipticity_min = lo;
        report.ellipticity_max = hi;
        const double g1 = problem.constants.gamma1, g2 = problem.constants.gamma2;
        const double lower_margin = lo - g1;
        const double upper_margin = g2 - hi;
        c.margin = std::min(lower_margin, upper_margin);
        c.worst_value = lower_margin <= upper_margin ? lo : hi;
        c.bound = lower_margin <= upper_margin ? g1 : g2;
        c.passed = lower_margin >= -kCheckRelTol * std::max(1.0, g1) && upper_margin >= -kCheckRelTol * std::max(1.0, g2);
        if (!c.passed) c.violation = describe(samples[lower_margin <= upper_margin ? wlo : whi], lower_margin <= upper_margin ? wlo : whi, dim);
        report.checks.push_back(std::move(c));
    }
    reduce_max(kB3A, L, "B3:a-bound", "|a_ij| + |d_i a_ij| + |d_ij a_ij| <= L");
    reduce_max(kB3BGrowth, L, "B3:b-growth", "|b| / (1 + |alpha|) <= L");
    reduce_max(kB3BX, L, "B3:b-x-derivative", "|d b_i / d x_i| / (1 + |alpha|) <= L");
    reduce_max(kB3BAlpha, L, "B3:b-alpha-derivative", "|d b_i / d alpha| <= L");
    reduce_max(kB3FGrowth, L, "B3:f-growth", "|f| / (1 + |alpha|^2) <= L");
    reduce_max(kB3FAlpha, L, "B3:f-alpha-derivative", "|d f / d alpha| / (1 + |alpha|) <= L");
    reduce_max(kB4A, L, "B4:a", "a Lipschitz in (x, m), 1/2-Hoelder in t");
    reduce_max(kB4B, L, "B4:b", "b Lipschitz in (x, m, alpha), 1/2-Hoelder in t");
    reduce_max(kB4F, L, "B4:f", "f Lipschitz in (x, m), locally in alpha, 1/2-Hoelder in t");
    reduce_max(kB4G, L, "B4:g", "g Lipschitz in (x, m)");
    reduce_max(kB5G, L, "B5:g-C1-bound", "|g| + |Dg| <= L (Hoelder part of Dg not estimated)");

    {
        AssumptionCheck c;
        c.id = "B6:m0";
        c.description = "m0 nonnegative with finite second moment";
        const auto m0 = discretize_initial_density(problem, grid);
        c.worst_value = second_moment(grid, m0);
        c.bound = c.worst_value;
        c.passed = std::isfinite(c.worst_value);
        if (!c.passed) c.violation = "second moment of m0 is not finite";
        report.checks.push_back(std::move(c));
    }

    if (closed_form) {
        reduce_max(kB7Growth, L, "B7:phi-growth", "|phi| / (1 + |p|) <= L");
        reduce_max(kB7X, L, "B7:phi-x-derivative", "|d phi / d x_i| / (1 + |p|) <= L");
        reduce_max(kB7P, L, "B7:phi-p-derivative", "|d phi / d p| <= L");
        for (const auto& v : values) report.phi_lipschitz_estimate = std::max(report.phi_lipschitz_estimate, v[kB7P]);
    } else {
        AssumptionCheck c;
        c.id = "B7";
        c.description = "assumption (B7) unchecked";
        c.checked = false;
        c.passed = false;
        report.checks.push_back(std::move(c));
    }
    return report;
}

}  // namespace mfg
