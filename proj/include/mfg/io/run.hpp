#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mfg/catalog/catalog.hpp"
#include "mfg/core/errors.hpp"
#include "mfg/cost/cost.hpp"
#include "mfg/hamiltonian/assumptions.hpp"
#include "mfg/io/checkpoint.hpp"
#include "mfg/io/config.hpp"
#include "mfg/io/csv.hpp"
#include "mfg/measure/regularity.hpp"
#include "mfg/measure/transport_lp.hpp"
#include "mfg/measure/wasserstein.hpp"
#include "mfg/oracle/heat.hpp"
#include "mfg/oracle/hopf_cole.hpp"
#include "mfg/oracle/riccati.hpp"
#include "mfg/particle/particle.hpp"
#include "mfg/solver/mfg_solver.hpp"
#include "mfg/solver/pde_residual.hpp"

namespace mfg::io {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverFailure = 3;
inline constexpr int kExitVerificationFailure = 4;
inline constexpr int kExitLocked = 5;

inline constexpr const char* kSummarySchema = "mfg-run-summary";
inline constexpr int kSummaryVersion = 1;

// Thresholds of the verification battery.
inline constexpr double kHopfColeTol = 5e-3;
inline constexpr double kRiccatiValueTol = 1e-2;
inline constexpr double kRiccatiGradientTol = 2e-2;
inline constexpr std::size_t kOracleMargin = 10;
inline constexpr double kMassDriftTol = 1e-8;
inline constexpr double kMinDensityTol = -1e-12;
inline constexpr double kHeatD1Tol = 2e-3;
inline constexpr double kParticleD1Tol = 5e-2;
inline constexpr double kDecoupledSecondResidualTol = 1e-12;
inline constexpr double kWassersteinAgreementTol = 1e-9;
inline constexpr double kResidualRatioMin = 1.5;
inline constexpr double kHolderStability = 0.10;
inline constexpr double kZeroResidual = 1e-12;

enum class RunMode { solve, verify, resume };

struct RunOutcome {
    int exit_code = kExitOk;
    std::string status;
    std::string message;
    json summary;
};

/// Exclusive lock on an output directory, released on destruction.
class DirectoryLock {
public:
    explicit DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
        std::FILE* f = std::fopen(path_.string().c_str(), "wx");
        if (!f) return;
        std::fprintf(f, "locked\n");
        std::fclose(f);
        held_ = true;
    }
    ~DirectoryLock() {
        if (held_) {
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;
    bool held() const noexcept { return held_; }

private:
    std::filesystem::path path_;
    bool held_ = false;
};

namespace detail {

inline json grid_json(const Grid& g) {
    return {{"dim", g.dim()},
            {"nodes_per_dim", g.nodes_per_dim()},
            {"time_steps", g.time_steps()},
            {"x_min", g.x_min(0)},
            {"x_max", g.x_max(0)},
            {"spacing", g.spacing(0)},
            {"horizon", g.horizon()},
            {"dt", g.dt()},
            {"hash", g.hash()}};
}

inline json config_json(const RunConfig& c) {
    const auto& fp = c.fixed_point;
    return {{"problem", c.problem},
            {"theta", fp.theta},
            {"tol", fp.tol},
            {"max_iters", fp.max_iters},
            {"initial_guess", fp.initial_guess == FixedPointConfig::InitialGuess::constant_m0 ? "constant_m0" : "uncontrolled_fp"},
            {"hjb_picard_inner_iters", fp.solvers.hjb.picard_inner_iters},
            {"hjb_advection", fp.solvers.hjb.advection == AdvectionScheme::hybrid ? "hybrid" : "upwind"},
            {"fp_advection", fp.solvers.fp.advection == AdvectionScheme::hybrid ? "hybrid" : "upwind"},
            {"fp_self_coupled", fp.solvers.fp.self_coupled},
            {"verify_particles", c.verify.particles},
            {"verify_cost_paths", c.verify.cost_paths},
            {"verify_perturbations", c.verify.perturbations},
            {"verify_seed", c.verify.seed},
            {"verify_assumption_samples", c.verify.assumption_samples},
            {"verify_refinement_study", c.verify.refinement_study}};
}

/// One named check: value against a threshold.
inline json check(const std::string& name, const std::string& criterion, double value, double threshold,
                  const std::string& relation, bool passed, bool gating = true) {
    return {{"name", name},      {"criterion", criterion}, {"value", value},  {"threshold", threshold},
            {"relation", relation}, {"passed", passed},    {"gating", gating}};
}

inline double interior_max_error(const Grid& g, const LevelField& a, const LevelField& b, std::size_t margin) {
    double err = 0.0;
    const std::size_t nx = g.nodes_per_dim();
    for (std::size_t k = 0; k < g.num_levels(); ++k) {
        for (std::size_t n = 0; n < g.num_nodes(); ++n) {
            bool inside = true;
            for (std::size_t d = 0; d < g.dim(); ++d) {
                const std::size_t i = g.axis_index(n, d);
                inside = inside && i >= margin && i + margin < nx;
            }
            if (inside) err = std::max(err, std::abs(a.at(k, n) - b.at(k, n)));
        }
    }
    return err;
}

inline double interior_gradient_error(const Grid& g, const ValueField& a, const ValueField& b, std::size_t margin) {
    double err = 0.0;
    const std::size_t nx = g.nodes_per_dim();
    for (std::size_t k = 0; k < g.num_levels(); ++k) {
        for (std::size_t n = 0; n < g.num_nodes(); ++n) {
            bool inside = true;
            for (std::size_t d = 0; d < g.dim(); ++d) {
                const std::size_t i = g.axis_index(n, d);
                inside = inside && i >= margin && i + margin < nx;
            }
            if (!inside) continue;
            for (std::size_t d = 0; d < g.dim(); ++d) err = std::max(err, std::abs(a.gradient[k][n][d] - b.gradient[k][n][d]));
        }
    }
    return err;
}

inline json assumptions_json(const AssumptionReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"id", c.id},
                          {"description", c.description},
                          {"checked", c.checked},
                          {"passed", c.passed},
                          {"worst_value", c.worst_value},
                          {"bound", c.bound},
                          {"margin", c.margin},
                          {"violation", c.violation}});
    }
    return {{"n_samples", r.n_samples},
            {"seed", r.seed},
            {"all_passed", r.all_passed()},
            {"ellipticity_min", r.ellipticity_min},
            {"ellipticity_max", r.ellipticity_max},
            {"phi_lipschitz_estimate", r.phi_lipschitz_estimate},
            {"phi_checked", r.phi_checked},
            {"checks", checks}};
}

inline json optimality_json(const OptimalityReport& r) {
    json perts = json::array();
    for (const auto& p : r.perturbations) {
        perts.push_back({{"index", p.index},
                         {"epsilon", p.epsilon},
                         {"mean", p.cost.mean},
                         {"std_error", p.cost.std_error},
                         {"gap", p.gap},
                         {"combined_std_error", p.combined_std_error},
                         {"passed", p.passed}});
    }
    json shifts = json::array();
    for (const auto& s : r.shifts) {
        shifts.push_back({{"epsilon", s.epsilon},
                          {"gap", s.gap},
                          {"expected_gap", s.expected_gap},
                          {"combined_std_error", s.combined_std_error},
                          {"passed", s.passed}});
    }
    return {{"feedback_mean", r.feedback.mean},
            {"feedback_std_error", r.feedback.std_error},
            {"n_paths", r.feedback.n_paths},
            {"seed", r.feedback.seed},
            {"expected_initial_value", r.expected_initial_value},
            {"value_gap", r.value_gap},
            {"value_check_passed", r.value_check_passed},
            {"perturbation_check_passed", r.perturbation_check_passed},
            {"shift_check_passed", r.shift_check_passed},
            {"perturbations", perts},
            {"shifts", shifts}};
}

inline std::string join(const std::filesystem::path& dir, const char* name) { return (dir / name).string(); }

}  // namespace detail

/// Runs every verification applicable to the instance and fills summary["verification"]
/// and summary["checks"]. Returns false if a gating check failed.
inline bool run_verification(const CatalogEntry& entry, const GridParams& gp, const Grid& grid, const MfgSolution& sol,
                             const RunConfig& config, json& summary, std::ostream& log) {
    const ProblemSpec& problem = entry.problem;
    const auto& rep = sol.report;
    const auto& vc = config.verify;
    json checks = json::array();
    json ver;

    // Conservation and positivity of every FP solve in the run.
    checks.push_back(detail::check("fp_mass_drift", "fp-conservation", rep.max_mass_drift, kMassDriftTol, "<=",
                                   rep.max_mass_drift <= kMassDriftTol));
    checks.push_back(detail::check("fp_min_density", "fp-positivity", rep.min_density, kMinDensityTol, ">=",
                                   rep.min_density >= kMinDensityTol));

    // Fixed point.
    checks.push_back(detail::check("fixed_point_residual", "fixed-point-convergence", rep.residual_history.back(),
                                   config.fixed_point.tol, "<=", rep.converged));
    if (entry.decoupled && rep.residual_history.size() >= 2) {
        const double r2 = rep.residual_history[1];
        checks.push_back(detail::check("decoupled_second_residual", "fixed-point-convergence", r2,
                                       kDecoupledSecondResidualTol, "<=",
                                       r2 <= kDecoupledSecondResidualTol && rep.residual_history.size() == 2));
    }

    // Analytic oracles.
    json oracle = {{"kind", "none"}};
    if (entry.oracle.kind == OracleInfo::Kind::hopf_cole) {
        log << "verify: Hopf-Cole oracle\n";
        const auto ref = hopf_cole_value(catalog::hopfcole_terminal, grid);
        const double err = detail::interior_max_error(grid, sol.u.values, ref.values, kOracleMargin);
        oracle = {{"kind", "hopf-cole"}, {"hjb_oracle_max_err", err}, {"margin_nodes", kOracleMargin}};
        checks.push_back(detail::check("hjb_oracle_max_err", "hjb-hopf-cole", err, kHopfColeTol, "<=", err <= kHopfColeTol));
    } else if (entry.oracle.kind == OracleInfo::Kind::riccati) {
        log << "verify: Riccati oracle\n";
        const auto ref = lq_riccati_value(entry.oracle.c, grid);
        const double err = detail::interior_max_error(grid, sol.u.values, ref.values, kOracleMargin);
        const double gerr = detail::interior_gradient_error(grid, sol.u, ref, kOracleMargin);
        oracle = {{"kind", "riccati"}, {"hjb_oracle_max_err", err}, {"hjb_oracle_gradient_max_err", gerr}, {"margin_nodes", kOracleMargin}};
        checks.push_back(detail::check("hjb_oracle_max_err", "hjb-riccati", err, kRiccatiValueTol, "<=", err <= kRiccatiValueTol));
        checks.push_back(detail::check("hjb_oracle_gradient_max_err", "hjb-riccati", gerr, kRiccatiGradientTol, "<=",
                                       gerr <= kRiccatiGradientTol));
    } else if (entry.oracle.kind == OracleInfo::Kind::heat) {
        log << "verify: heat-kernel oracle\n";
        const auto ref = heat_flow_density({zero_vec(), entry.oracle.variance0}, entry.oracle.sigma, grid);
        const auto prof = flow_distance_profile(grid, sol.m, ref);
        double mx = 0.0;
        for (double v : prof) mx = std::max(mx, v);
        oracle = {{"kind", "heat"}, {"fp_heat_max_d1", mx}};
        checks.push_back(detail::check("fp_heat_max_d1", "fp-heat-kernel", mx, kHeatD1Tol, "<=", mx <= kHeatD1Tol));
    }
    ver["oracle"] = oracle;

    // Particles against the flow.
    log << "verify: " << vc.particles << " particles\n";
    {
        const PolicyFn pol = interpolated_policy(grid, sol.policy);
        ParticleEnsemble info;
        const auto lc = simulate_and_compare(problem, grid, sol.m, pol, vc.particles, vc.seed, 1, &info);
        ver["particles"] = {{"n_particles", vc.particles},
                            {"seed", vc.seed},
                            {"max_d1", lc.max_d1},
                            {"d1_final", lc.d1.back()},
                            {"boundary_leak", info.boundary_leak},
                            {"leak_warning", info.leak_warning},
                            {"max_abs_position", info.max_abs_position}};
        checks.push_back(detail::check("particle_max_d1", "sde-fp-duality", lc.max_d1, kParticleD1Tol, "<=",
                                       lc.max_d1 <= kParticleD1Tol));
        if (vc.ensemble_dump_stride > 0) {
            SimulationConfig sc;
            sc.record_stride = vc.ensemble_dump_stride;
            const auto ens = simulate(problem, grid, sol.m, pol, vc.ensemble_dump_particles, vc.seed, sc);
            write_ensemble(detail::join(config.output_dir, "ensemble.bin"), grid, ens);
        }
    }

    // Verification theorem.
    if (entry.controlled) {
        log << "verify: optimality with " << vc.cost_paths << " paths\n";
        const auto opt = verify_optimality(problem, grid, sol.u, sol.m, vc.perturbations, vc.cost_paths, vc.seed + 1);
        ver["optimality"] = detail::optimality_json(opt);
        checks.push_back(detail::check("optimality_value_gap", "verification-theorem", std::abs(opt.value_gap),
                                       3.0 * opt.feedback.std_error + 2e-2, "<=", opt.value_check_passed));
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& p : opt.perturbations) worst = std::min(worst, p.gap + 3.0 * p.combined_std_error);
        checks.push_back(detail::check("optimality_perturbations", "verification-theorem",
                                       opt.perturbations.empty() ? 0.0 : worst, 0.0, ">=", opt.perturbation_check_passed));
        if (!opt.shifts.empty()) {
            double dev = 0.0;
            for (const auto& s : opt.shifts) dev = std::max(dev, std::abs(s.gap - s.expected_gap));
            checks.push_back(detail::check("optimality_shift_gap", "verification-theorem", dev, 0.0, "within 3 SE + 2e-2",
                                           opt.shift_check_passed));
        }
    } else {
        ver["optimality"] = {{"skipped", "problem has no control"}};
    }

    // PDE residuals and regularity, optionally against one refinement.
    ver["pde_residual"] = {{"hjb", rep.pde_residuals.hjb}, {"fp", rep.pde_residuals.fp}};
    const auto& reg = rep.final_flow_regularity;
    ver["regularity"] = {{"holder_half_seminorm", reg.holder_half_seminorm},
                         {"max_second_moment", reg.max_second_moment},
                         {"implied_C1", reg.implied_C1},
                         {"max_abs_particle_proxy", ver["particles"]["max_abs_position"]}};
    const bool finite_reg = std::isfinite(reg.holder_half_seminorm) && std::isfinite(reg.max_second_moment);
    checks.push_back(detail::check("holder_half_seminorm", "d-membership", reg.holder_half_seminorm, 0.0, "finite", finite_reg));
    if (vc.refinement_study) {
        log << "verify: refinement study\n";
        const Grid fine = gp.refined().build();
        FixedPointConfig fc = config.fixed_point;
        const auto fsol = solve_mfg(problem, fine, fc);
        const auto& fr = fsol.report;
        auto ratio = [](double coarse, double finer) {
            if (coarse <= kZeroResidual && finer <= kZeroResidual) return std::numeric_limits<double>::infinity();
            return finer > 0.0 ? coarse / finer : std::numeric_limits<double>::infinity();
        };
        const double rh = ratio(rep.pde_residuals.hjb, fr.pde_residuals.hjb);
        const double rf = ratio(rep.pde_residuals.fp, fr.pde_residuals.fp);
        const double h0 = reg.holder_half_seminorm, h1 = fr.final_flow_regularity.holder_half_seminorm;
        const double drift = std::abs(h1 - h0) / std::max(h0, std::numeric_limits<double>::min());
        ver["refinement"] = {{"converged", fr.converged},
                             {"pde_residual_hjb", fr.pde_residuals.hjb},
                             {"pde_residual_fp", fr.pde_residuals.fp},
                             {"hjb_ratio", std::isinf(rh) ? json("exact") : json(rh)},
                             {"fp_ratio", std::isinf(rf) ? json("exact") : json(rf)},
                             {"holder_half_seminorm", h1},
                             {"holder_relative_change", drift},
                             {"max_second_moment", fr.final_flow_regularity.max_second_moment}};
        checks.push_back(detail::check("pde_residual_hjb_ratio", "pde-residual", std::isinf(rh) ? 0.0 : rh,
                                       kResidualRatioMin, ">=", rh >= kResidualRatioMin));
        checks.push_back(detail::check("pde_residual_fp_ratio", "pde-residual", std::isinf(rf) ? 0.0 : rf,
                                       kResidualRatioMin, ">=", rf >= kResidualRatioMin));
        checks.push_back(detail::check("holder_refinement_change", "d-membership", drift, kHolderStability, "<=",
                                       drift <= kHolderStability));
    }

    // Wasserstein oracle agreement on the first and last level.
    if (grid.dim() == 1 && grid.num_nodes() <= kMaxLpSupport) {
        const auto a = sol.m.level(0), b = sol.m.level(grid.num_levels() - 1);
        const double cdf = d1_1d(grid, a, b);
        const double lp = d1_lp(grid, a, b);
        ver["wasserstein"] = {{"d1_cdf", cdf}, {"d1_lp", lp}, {"gap", std::abs(cdf - lp)}};
        checks.push_back(detail::check("wasserstein_cdf_vs_lp", "wasserstein-oracle", std::abs(cdf - lp),
                                       kWassersteinAgreementTol, "<=", std::abs(cdf - lp) <= kWassersteinAgreementTol));
    }

    // Structural assumptions, reported only.
    log << "verify: assumptions\n";
    const auto ar = check_assumptions(problem, grid, vc.assumption_samples, vc.seed + 2);
    ver["assumptions"] = detail::assumptions_json(ar);
    checks.push_back(detail::check("assumptions", "structural-assumptions", ar.all_passed() ? 1.0 : 0.0, 1.0, "==",
                                   ar.all_passed(), false));

    bool passed = true;
    for (const auto& c : checks) {
        if (c["gating"].get<bool>() && !c["passed"].get<bool>()) passed = false;
    }
    summary["verification"] = ver;
    summary["checks"] = checks;
    summary["verification_passed"] = passed;
    return passed;
}

/// Solves (or continues, or re-evaluates) the configured run, verifies it and writes
/// summary.json, u_field.csv, m_flow.csv, residuals.csv and checkpoint.bin. Config
/// problems are reported before anything is written.
inline RunOutcome run(const RunConfig& config, RunMode mode, bool skip_verify, std::ostream& log) {
    RunOutcome out;
    namespace fs = std::filesystem;
    CatalogEntry entry;
    GridParams gp;
    std::optional<FixedPointState> resume_state;
    const fs::path dir(config.output_dir);
    const std::string ckpt = detail::join(dir, "checkpoint.bin");
    std::uint64_t fingerprint = 0;
    Grid grid;
    try {
        std::tie(entry, gp) = validate_run_config(config);
        grid = gp.build();
        fingerprint = run_fingerprint(config.problem, config.fixed_point);
        if (mode != RunMode::solve || config.resume) {
            if (!fs::exists(ckpt)) throw ConfigError("no checkpoint at '" + ckpt + "'");
            try {
                resume_state = read_checkpoint(ckpt, grid, fingerprint);
            } catch (const FormatError& e) {
                throw ConfigError(std::string("checkpoint unusable: ") + e.what());
            }
        }
    } catch (const ConfigError& e) {
        out.exit_code = kExitConfigError;
        out.status = "config_error";
        out.message = e.what();
        return out;
    } catch (const InvalidArgument& e) {
        out.exit_code = kExitConfigError;
        out.status = "config_error";
        out.message = e.what();
        return out;
    }

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        out.exit_code = kExitConfigError;
        out.status = "config_error";
        out.message = "cannot create output directory '" + dir.string() + "': " + ec.message();
        return out;
    }
    DirectoryLock lock(dir);
    if (!lock.held()) {
        out.exit_code = kExitLocked;
        out.status = "locked";
        out.message = "output directory '" + dir.string() + "' is locked by another run (remove .lock if stale)";
        return out;
    }

    json& summary = out.summary;
    summary["schema"] = kSummarySchema;
    summary["schema_version"] = kSummaryVersion;
    summary["problem"] = {{"name", entry.name}, {"description", entry.description}, {"dim", entry.problem.dim},
                          {"decoupled", entry.decoupled}, {"controlled", entry.controlled}};
    summary["grid"] = detail::grid_json(grid);
    summary["config"] = detail::config_json(config);
    summary["mode"] = mode == RunMode::solve ? "solve" : (mode == RunMode::verify ? "verify" : "resume");

    auto write_summary = [&] {
        std::ofstream os(detail::join(dir, "summary.json"));
        os << summary.dump(2) << '\n';
    };

    MfgSolution sol;
    bool interrupted = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        FixedPointConfig fpc = config.fixed_point;
        if (mode == RunMode::verify) fpc.max_iters = std::max<std::size_t>(1, resume_state->iteration);
        FixedPointHooks hooks;
        hooks.after_iteration = [&](const FixedPointState& s) {
            write_checkpoint(ckpt, grid, s, fingerprint);
            log << "iteration " << s.iteration << " rho " << format_double(s.residual_history.back()) << '\n';
            if (config.stop_after && s.iteration >= static_cast<std::size_t>(*config.stop_after)) {
                interrupted = true;
                return false;
            }
            return true;
        };
        if (!resume_state) write_checkpoint(ckpt, grid, initial_state(entry.problem, grid, fpc), fingerprint);
        sol = solve_mfg(entry.problem, grid, fpc, resume_state, hooks);
        interrupted = interrupted && !sol.report.converged;
    } catch (const Error& e) {
        out.exit_code = kExitSolverFailure;
        out.status = "solver_failure";
        out.message = e.what();
        summary["status"] = out.status;
        summary["message"] = out.message;
        write_summary();
        return out;
    }
    const double solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto& rep = sol.report;
    summary["fixed_point"] = {{"converged", rep.converged},
                              {"iterations", rep.iterations_used},
                              {"residual_history", rep.residual_history},
                              {"final_residual", rep.residual_history.empty() ? 0.0 : rep.residual_history.back()},
                              {"max_mass_drift", rep.max_mass_drift},
                              {"min_density", rep.min_density},
                              {"seconds", solve_seconds}};
    summary["hjb"] = {{"max_cfl", rep.hjb_diagnostics.max_cfl},
                      {"cfl_warnings", rep.hjb_diagnostics.cfl_warnings},
                      {"padding_nodes", rep.hjb_diagnostics.padding_nodes}};
    summary["fp"] = {{"max_mass_drift", rep.fp_diagnostics.max_mass_drift},
                     {"min_density", rep.fp_diagnostics.min_density},
                     {"clipped_nodes", rep.fp_diagnostics.clipped_nodes}};

    try {
        write_residuals_csv(detail::join(dir, "residuals.csv"), rep.residual_history);
        write_field_csv(detail::join(dir, "u_field.csv"), grid, sol.u.values);
        write_field_csv(detail::join(dir, "m_flow.csv"), grid, sol.m);
    } catch (const Error& e) {
        out.exit_code = kExitSolverFailure;
        out.status = "io_failure";
        out.message = e.what();
        summary["status"] = out.status;
        summary["message"] = out.message;
        write_summary();
        return out;
    }

    if (interrupted) {
        out.exit_code = kExitOk;
        out.status = "interrupted";
        out.message = "stopped after iteration " + std::to_string(rep.iterations_used) + "; continue with resume";
    } else if (!rep.converged) {
        out.exit_code = kExitSolverFailure;
        out.status = "not_converged";
        out.message = "fixed point did not reach tol within max_iters";
    } else if (skip_verify) {
        out.exit_code = kExitOk;
        out.status = "ok_unverified";
    } else {
        try {
            const bool ok = run_verification(entry, gp, grid, sol, config, summary, log);
            out.exit_code = ok ? kExitOk : kExitVerificationFailure;
            out.status = ok ? "ok" : "verification_failed";
            if (!ok) out.message = "converged, but verification checks failed (see summary.json checks)";
        } catch (const Error& e) {
            out.exit_code = kExitSolverFailure;
            out.status = "solver_failure";
            out.message = std::string("verification aborted: ") + e.what();
        }
    }
    summary["status"] = out.status;
    summary["exit_code"] = out.exit_code;
    if (!out.message.empty()) summary["message"] = out.message;
    write_summary();
    return out;
}

}  // namespace mfg::io
