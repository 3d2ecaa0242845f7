#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "mfg/catalog/catalog.hpp"
#include "mfg/core/errors.hpp"
#include "mfg/solver/mfg_solver.hpp"

namespace mfg::io {

/// Verification battery settings.
struct VerifyConfig {
    std::size_t particles = 100000;
    std::size_t cost_paths = 100000;
    std::size_t perturbations = 5;
    std::uint64_t seed = 20240607;
    std::size_t assumption_samples = 1000;
    std::size_t ensemble_dump_stride = 0;  // 0: no ensemble snapshot
    std::size_t ensemble_dump_particles = 1000;
    bool refinement_study = false;         // re-solve on the refined grid for the residual ratios
};

struct RunConfig {
    std::string problem = "example5-weak";  // catalog name or path to a problem file
    // Grid overrides; unset fields keep the catalog defaults.
    std::optional<long long> nx, nt;
    std::optional<double> x_min, x_max, horizon;
    long long refine = 0;  // halve h and dt this many times
    FixedPointConfig fixed_point;
    VerifyConfig verify;
    std::string output_dir = "mfg_out";
    bool resume = false;
    std::optional<long long> stop_after;  // stop the iteration after this many Phi evaluations
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline long long parse_int(std::string_view key, std::string_view v) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
    }
    return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError("'" + std::string(key) + "' expects a finite number, got '" + std::string(v) + "'");
    }
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(v) + "'");
}

inline std::size_t parse_count(std::string_view key, std::string_view v, long long min) {
    const long long n = parse_int(key, v);
    if (n < min) throw ConfigError("'" + std::string(key) + "' must be at least " + std::to_string(min));
    return static_cast<std::size_t>(n);
}

inline AdvectionScheme parse_advection(std::string_view key, std::string_view v) {
    if (v == "hybrid") return AdvectionScheme::hybrid;
    if (v == "upwind") return AdvectionScheme::upwind;
    throw ConfigError("'" + std::string(key) + "' must be hybrid or upwind");
}

}  // namespace detail

/// Parses `key = value` lines. '#' starts a comment; blank lines are ignored. Keys may
/// appear once. Returns the pairs in key order.
inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, value).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        if (end == text.size()) break;
    }
    return kv;
}

/// Applies one setting; unknown keys and out-of-range values throw ConfigError.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    auto& fp = c.fixed_point;
    auto& v = c.verify;
    if (key == "problem") {
        if (value.empty()) throw ConfigError("'problem' must not be empty");
        c.problem = value;
    } else if (key == "output_dir") {
        if (value.empty()) throw ConfigError("'output_dir' must not be empty");
        c.output_dir = value;
    } else if (key == "resume") {
        c.resume = parse_bool(key, value);
    } else if (key == "stop_after") {
        c.stop_after = static_cast<long long>(parse_count(key, value, 1));
    } else if (key == "grid.nx") {
        c.nx = parse_int(key, value);
    } else if (key == "grid.nt") {
        c.nt = parse_int(key, value);
    } else if (key == "grid.x_min") {
        c.x_min = parse_real(key, value);
    } else if (key == "grid.x_max") {
        c.x_max = parse_real(key, value);
    } else if (key == "grid.horizon") {
        c.horizon = parse_real(key, value);
    } else if (key == "grid.refine") {
        c.refine = parse_int(key, value);
    } else if (key == "fixed_point.theta") {
        fp.theta = parse_real(key, value);
    } else if (key == "fixed_point.tol") {
        fp.tol = parse_real(key, value);
    } else if (key == "fixed_point.max_iters") {
        fp.max_iters = parse_count(key, value, 1);
    } else if (key == "fixed_point.initial_guess") {
        if (value == "constant_m0") {
            fp.initial_guess = FixedPointConfig::InitialGuess::constant_m0;
        } else if (value == "uncontrolled_fp") {
            fp.initial_guess = FixedPointConfig::InitialGuess::uncontrolled_fp;
        } else {
            throw ConfigError("'fixed_point.initial_guess' must be constant_m0 or uncontrolled_fp");
        }
    } else if (key == "hjb.picard_inner_iters") {
        fp.solvers.hjb.picard_inner_iters = parse_count(key, value, 1);
    } else if (key == "hjb.advection") {
        fp.solvers.hjb.advection = parse_advection(key, value);
    } else if (key == "hjb.padding_nodes") {
        fp.solvers.hjb.padding_nodes = parse_count(key, value, 0);
    } else if (key == "fp.advection") {
        fp.solvers.fp.advection = parse_advection(key, value);
    } else if (key == "fp.self_coupled") {
        fp.solvers.fp.self_coupled = parse_bool(key, value);
    } else if (key == "fp.self_coupled_sweeps") {
        fp.solvers.fp.self_coupled_sweeps = parse_count(key, value, 1);
    } else if (key == "fp.renormalize_each_step") {
        fp.solvers.fp.renormalize_each_step = parse_bool(key, value);
    } else if (key == "verify.particles") {
        v.particles = parse_count(key, value, 1);
    } else if (key == "verify.cost_paths") {
        v.cost_paths = parse_count(key, value, 2);
    } else if (key == "verify.perturbations") {
        v.perturbations = parse_count(key, value, 0);
    } else if (key == "verify.seed") {
        v.seed = static_cast<std::uint64_t>(parse_count(key, value, 0));
    } else if (key == "verify.assumption_samples") {
        v.assumption_samples = parse_count(key, value, 1);
    } else if (key == "verify.ensemble_dump_stride") {
        v.ensemble_dump_stride = parse_count(key, value, 0);
    } else if (key == "verify.ensemble_dump_particles") {
        v.ensemble_dump_particles = parse_count(key, value, 1);
    } else if (key == "verify.refinement_study") {
        v.refinement_study = parse_bool(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

inline RunConfig parse_run_config(std::string_view text) {
    RunConfig c;
    for (const auto& [k, v] : parse_key_values(text)) apply_setting(c, k, v);
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

/// A problem file selects a catalog family and overrides its parameters:
///   family = example5-weak | lq-riccati | decoupled-hopfcole | uncontrolled-fp | heat
///   kappa, c, variance0, sigma, dim as the family allows.
inline CatalogEntry load_problem_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read problem file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    auto kv = parse_key_values(ss.str());
    auto take = [&kv](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    const auto family = take("family");
    if (!family) throw ConfigError("problem file '" + path + "' has no 'family' key");
    auto real = [&](const std::string& key, double fallback) {
        const auto v = take(key);
        return v ? detail::parse_real(key, *v) : fallback;
    };
    auto dim = [&]() -> std::size_t {
        const auto v = take("dim");
        const std::size_t d = v ? detail::parse_count("dim", *v, 1) : 1;
        if (d > 2) throw ConfigError("'dim' must be 1 or 2");
        return d;
    };
    CatalogEntry e;
    if (*family == "example5-weak") {
        e = make_example5_weak(real("kappa", 0.1));
    } else if (*family == "lq-riccati") {
        const double c = real("c", 0.5);
        if (!(c > 0.0)) throw ConfigError("'c' must be positive");
        e = make_lq_riccati(c);
    } else if (*family == "decoupled-hopfcole") {
        e = make_decoupled_hopfcole(dim());
    } else if (*family == "uncontrolled-fp") {
        e = make_uncontrolled_fp();
    } else if (*family == "heat") {
        const double var0 = real("variance0", 0.25);
        const double sigma = real("sigma", std::numbers::sqrt2);
        if (!(var0 > 0.0) || !(sigma > 0.0)) throw ConfigError("'variance0' and 'sigma' must be positive");
        e = make_heat(var0, sigma, dim());
    } else {
        throw ConfigError("unknown problem family '" + *family + "'");
    }
    if (!kv.empty()) throw ConfigError("problem file key '" + kv.begin()->first + "' is not used by family '" + *family + "'");
    return e;
}

/// Catalog entry named by the config, or the problem file it points to.
inline CatalogEntry resolve_problem(const RunConfig& c) {
    for (const auto& name : catalog_names()) {
        if (name == c.problem) return catalog_entry(name);
    }
    std::error_code ec;
    if (std::filesystem::is_regular_file(c.problem, ec)) return load_problem_file(c.problem);
    throw ConfigError("problem '" + c.problem + "' is neither a catalog name nor a readable file");
}

/// Grid parameters after overrides, validated.
inline GridParams resolve_grid(const RunConfig& c, const CatalogEntry& e) {
    GridParams g = e.grid;
    if (c.nx) {
        if (*c.nx < 3) throw ConfigError("grid.nx must be at least 3");
        g.nodes_per_dim = static_cast<std::size_t>(*c.nx);
    }
    if (c.nt) {
        if (*c.nt < 1) throw ConfigError("grid.nt must be at least 1");
        g.time_steps = static_cast<std::size_t>(*c.nt);
    }
    for (std::size_t d = 0; d < g.dim; ++d) {
        if (c.x_min) g.x_min[d] = *c.x_min;
        if (c.x_max) g.x_max[d] = *c.x_max;
    }
    if (!(g.x_min[0] < g.x_max[0])) throw ConfigError("grid.x_min must be below grid.x_max");
    if (c.horizon) {
        if (!(*c.horizon > 0.0)) throw ConfigError("grid.horizon must be positive");
        g.horizon = *c.horizon;
    }
    if (c.refine < 0 || c.refine > 4) throw ConfigError("grid.refine must be between 0 and 4");
    for (long long r = 0; r < c.refine; ++r) g = g.refined();
    const double nodes = std::pow(static_cast<double>(g.nodes_per_dim), static_cast<double>(g.dim)) *
                         static_cast<double>(g.time_steps + 1);
    if (nodes > 5e8) throw ConfigError("grid is too large (" + std::to_string(nodes) + " space-time nodes)");
    return g;
}

/// Checks every setting before any work starts. Returns the resolved problem and grid.
inline std::pair<CatalogEntry, GridParams> validate_run_config(const RunConfig& c) {
    CatalogEntry e = resolve_problem(c);
    GridParams g = resolve_grid(c, e);
    e.problem.horizon = g.horizon;
    try {
        validate_fixed_point_config(c.fixed_point);
        validate_problem(e.problem);
    } catch (const InvalidArgument& err) {
        throw ConfigError(err.what());
    }
    if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
    return {std::move(e), g};
}

/// Identifies the iteration a checkpoint belongs to: problem, damping and initial guess.
inline std::uint64_t run_fingerprint(const std::string& problem_name, const FixedPointConfig& c) {
    std::uint64_t state = 1469598103934665603ULL;
    auto mix = [&state](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= bytes[i];
            state *= 1099511628211ULL;
        }
    };
    mix(problem_name.data(), problem_name.size());
    mix(&c.theta, sizeof c.theta);
    const auto guess = static_cast<int>(c.initial_guess);
    mix(&guess, sizeof guess);
    return state;
}

}  // namespace mfg::io
