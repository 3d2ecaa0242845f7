// mfg: solve, verify and resume mean-field-game runs; list the problem catalog.
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfg/catalog/catalog.hpp"
#include "mfg/io/config.hpp"
#include "mfg/io/run.hpp"

namespace {

struct Common {
    std::string config_file;
    std::vector<std::string> settings;
    std::string problem;
    std::string output;
    long long stop_after = 0;
    long long threads = 0;
    bool skip_verify = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool allow_skip, bool allow_stop) {
    cmd->add_option("-c,--config", c.config_file, "key = value config file");
    cmd->add_option("-s,--set", c.settings, "override one setting, key=value (repeatable)");
    cmd->add_option("-p,--problem", c.problem, "catalog name or problem file");
    cmd->add_option("-o,--output", c.output, "output directory");
    cmd->add_option("-j,--threads", c.threads, "worker threads (sets MFG_THREADS)");
    cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
    if (allow_skip) cmd->add_flag("--skip-verify", c.skip_verify, "write the solution without the verification battery");
    if (allow_stop) cmd->add_option("--stop-after", c.stop_after, "stop after this many fixed-point iterations");
}

mfg::io::RunConfig build_config(const Common& c) {
    mfg::io::RunConfig cfg = c.config_file.empty() ? mfg::io::RunConfig{} : mfg::io::load_run_config(c.config_file);
    for (const auto& s : c.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw mfg::ConfigError("--set expects key=value, got '" + s + "'");
        auto kv = mfg::io::parse_key_values(s);
        for (const auto& [k, v] : kv) mfg::io::apply_setting(cfg, k, v);
    }
    if (!c.problem.empty()) cfg.problem = c.problem;
    if (!c.output.empty()) cfg.output_dir = c.output;
    if (c.stop_after < 0) throw mfg::ConfigError("--stop-after must be positive");
    if (c.stop_after > 0) cfg.stop_after = c.stop_after;
    return cfg;
}

int execute(const Common& c, mfg::io::RunMode mode) {
    mfg::io::RunConfig cfg;
    try {
        if (c.threads < 0) throw mfg::ConfigError("--threads must be positive");
        cfg = build_config(c);
    } catch (const mfg::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return mfg::io::kExitConfigError;
    }
    if (c.threads > 0) setenv("MFG_THREADS", std::to_string(c.threads).c_str(), 1);
    std::ostream null_stream(nullptr);
    const auto outcome = mfg::io::run(cfg, mode, c.skip_verify, c.quiet ? null_stream : std::cerr);
    std::cout << "status: " << outcome.status;
    if (!outcome.message.empty()) std::cout << " (" << outcome.message << ')';
    std::cout << '\n';
    if (outcome.summary.contains("checks")) {
        for (const auto& chk : outcome.summary["checks"]) {
            std::cout << (chk["passed"].get<bool>() ? "  PASS " : (chk["gating"].get<bool>() ? "  FAIL " : "  WARN "))
                      << chk["name"].get<std::string>() << " = " << chk["value"].dump() << '\n';
        }
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field-game solver and verification toolkit"};
    app.require_subcommand(1);

    Common solve_opts, verify_opts, resume_opts;
    auto* solve = app.add_subcommand("solve", "run the fixed-point iteration, then verify");
    add_common(solve, solve_opts, true, true);
    auto* verify = app.add_subcommand("verify", "re-evaluate the checkpointed solution and verify it");
    add_common(verify, verify_opts, false, false);
    auto* resume = app.add_subcommand("resume", "continue the iteration from the checkpoint, then verify");
    add_common(resume, resume_opts, true, true);

    auto* catalog = app.add_subcommand("catalog", "problem catalog");
    catalog->require_subcommand(1);
    auto* list = catalog->add_subcommand("list", "list built-in problems");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mfg::io::kExitConfigError;
    }

    if (*solve) return execute(solve_opts, mfg::io::RunMode::solve);
    if (*verify) return execute(verify_opts, mfg::io::RunMode::verify);
    if (*resume) return execute(resume_opts, mfg::io::RunMode::resume);
    if (*list) {
        for (const auto& name : mfg::catalog_names()) {
            const auto e = mfg::catalog_entry(name);
            std::cout << name << "  " << e.description << '\n';
        }
        return 0;
    }
    return mfg::io::kExitConfigError;
}
