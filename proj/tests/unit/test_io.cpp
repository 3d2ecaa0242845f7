#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "mfg/io/checkpoint.hpp"
#include "mfg/io/config.hpp"
#include "mfg/io/csv.hpp"
#include "mfg/io/run.hpp"
#include "support.hpp"

namespace mfg {
namespace {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("mfg_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    std::string str(const char* name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// ---- CSV ----

TEST(Csv, FormatParsesBackExactly) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-300, 300);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::ldexp(mant(rng), ex(rng));
        ASSERT_EQ(io::parse_double(io::format_double(v)), v);
    }
    EXPECT_EQ(io::parse_double(" +1.5 "), 1.5);
    EXPECT_THROW(io::parse_double("1.5x"), FormatError);
    EXPECT_THROW(io::parse_double(""), FormatError);
}

TEST(Csv, FieldRoundTripIsExact) {
    for (std::size_t dim : {1u, 2u}) {
        const Grid g = build_grid(dim, -1.0, 1.0, 7, 0.5, 3);
        LevelField f(g.num_levels(), g.num_nodes());
        std::mt19937_64 rng(dim);
        std::normal_distribution<double> z;
        for (double& v : f.raw()) v = z(rng) * 1e-3;
        std::stringstream ss;
        io::write_field_csv(ss, g, f);
        const auto back = io::read_field_csv(ss, g);
        EXPECT_EQ(back.raw(), f.raw());
    }
}

TEST(Csv, RejectsMalformedInput) {
    const Grid g = build_grid(1, -1.0, 1.0, 3, 1.0, 1);
    LevelField f(g.num_levels(), g.num_nodes());
    std::stringstream ok;
    io::write_field_csv(ok, g, f);
    const std::string text = ok.str();

    std::stringstream truncated(text.substr(0, text.rfind('\n', text.size() - 2) + 1));
    EXPECT_THROW(io::read_field_csv(truncated, g), FormatError);
    std::stringstream bad_header("t,x1,x2,value\n" + text.substr(text.find('\n') + 1));
    EXPECT_THROW(io::read_field_csv(bad_header, g), FormatError);
    std::string garbled = text;
    garbled[garbled.rfind(',') + 1] = 'z';
    std::stringstream garbled_ss(garbled);
    EXPECT_THROW(io::read_field_csv(garbled_ss, g), FormatError);
    const Grid other = build_grid(1, -1.0, 1.0, 4, 1.0, 1);
    std::stringstream wrong_grid(text);
    EXPECT_THROW(io::read_field_csv(wrong_grid, other), FormatError);
}

// ---- checkpoints ----

struct CheckpointFixture : ::testing::Test {
    Grid grid = build_grid(1, -3.0, 3.0, 31, 1.0, 20);
    FixedPointState state;
    std::uint64_t fp = 0x1234;

    void SetUp() override {
        const auto e = catalog_entry("example5-weak");
        FixedPointConfig c;
        c.max_iters = 3;
        FixedPointHooks hooks;
        hooks.after_iteration = [&](const FixedPointState& s) {
            state = s;
            return s.iteration < 2;
        };
        solve_mfg(e.problem, grid, c, std::nullopt, hooks);
        ASSERT_EQ(state.iteration, 2u);
    }
};

TEST_F(CheckpointFixture, RoundTripIsBitIdentical) {
    const auto bytes = io::encode_checkpoint(grid, state, fp);
    const auto back = io::decode_checkpoint(bytes, grid, fp);
    EXPECT_EQ(back.iteration, state.iteration);
    EXPECT_EQ(back.residual_history, state.residual_history);
    EXPECT_EQ(back.mu.raw(), state.mu.raw());
    EXPECT_EQ(back.last_input.raw(), state.last_input.raw());
    EXPECT_EQ(back.last_output.raw(), state.last_output.raw());
    EXPECT_EQ(back.max_mass_drift, state.max_mass_drift);
    EXPECT_EQ(back.min_density, state.min_density);
    EXPECT_EQ(io::encode_checkpoint(grid, back, fp), bytes);
}

TEST_F(CheckpointFixture, CorruptionIsDetected) {
    const auto good = io::encode_checkpoint(grid, state, fp);
    auto magic = good;
    magic[0] = 'X';
    EXPECT_THROW(io::decode_checkpoint(magic, grid, fp), FormatError);
    auto version = good;
    version[4] = 9;
    EXPECT_THROW(io::decode_checkpoint(version, grid, fp), FormatError);
    EXPECT_THROW(io::decode_checkpoint(good, grid, fp + 1), FormatError);
    EXPECT_THROW(io::decode_checkpoint(good, build_grid(1, -3.0, 3.0, 31, 1.0, 21), fp), FormatError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{40}, good.size() - 1}) {
        EXPECT_THROW(io::decode_checkpoint(std::vector<char>(good.begin(), good.begin() + static_cast<long>(cut)), grid, fp),
                     FormatError);
    }
    auto trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(io::decode_checkpoint(trailing, grid, fp), FormatError);
}

TEST_F(CheckpointFixture, FileRoundTrip) {
    TempDir dir;
    io::write_checkpoint(dir.str("c.bin"), grid, state, fp);
    EXPECT_EQ(io::read_checkpoint(dir.str("c.bin"), grid, fp).mu.raw(), state.mu.raw());
    EXPECT_THROW(io::read_checkpoint(dir.str("missing.bin"), grid, fp), FormatError);
}

TEST(Ensemble, FileRoundTrip) {
    TempDir dir;
    const Grid g = build_grid(2, -2.0, 2.0, 9, 1.0, 4);
    ParticleEnsemble e;
    e.seed = 77;
    e.n_particles = 3;
    e.levels = {0, 2, 4};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    e.positions.assign(3, std::vector<Vec>(3, zero_vec()));
    for (auto& s : e.positions) {
        for (Vec& x : s) x = Vec{z(rng), z(rng)};
    }
    io::write_ensemble(dir.str("e.bin"), g, e);
    const auto back = io::read_ensemble(dir.str("e.bin"), g);
    EXPECT_EQ(back.seed, 77u);
    EXPECT_EQ(back.levels, e.levels);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_EQ(back.positions[r][i][0], e.positions[r][i][0]);
            EXPECT_EQ(back.positions[r][i][1], e.positions[r][i][1]);
        }
    }
    EXPECT_THROW(io::read_ensemble(dir.str("e.bin"), build_grid(2, -2.0, 2.0, 11, 1.0, 4)), FormatError);
}

// ---- config ----

TEST(Config, ParsesKeyValueLines) {
    const auto kv = io::parse_key_values("# header\n a = 1 \n\nb=two # trailing\r\nc =\n");
    ASSERT_EQ(kv.size(), 3u);
    EXPECT_EQ(kv.at("a"), "1");
    EXPECT_EQ(kv.at("b"), "two");
    EXPECT_EQ(kv.at("c"), "");
}

TEST(Config, ErrorsNameTheLine) {
    auto message = [](const char* text) {
        try {
            io::parse_key_values(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("a = 1\nb\n").find("line 2"), std::string::npos);
    EXPECT_NE(message("a = 1\n\na = 2\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("a = 1\n\na = 2\n").find("duplicate"), std::string::npos);
    EXPECT_NE(message(" = 4").find("empty key"), std::string::npos);
}

TEST(Config, AppliesSettings) {
    const auto c = io::parse_run_config(
        "problem = lq-riccati\ngrid.nx = 41\ngrid.nt = 50\nfixed_point.theta = 0.5\nhjb.advection = upwind\n"
        "fp.self_coupled = true\nverify.particles = 1000\nverify.refinement_study = yes\n");
    EXPECT_EQ(c.problem, "lq-riccati");
    EXPECT_EQ(*c.nx, 41);
    EXPECT_EQ(*c.nt, 50);
    EXPECT_EQ(c.fixed_point.theta, 0.5);
    EXPECT_EQ(c.fixed_point.solvers.hjb.advection, AdvectionScheme::upwind);
    EXPECT_TRUE(c.fixed_point.solvers.fp.self_coupled);
    EXPECT_EQ(c.verify.particles, 1000u);
    EXPECT_TRUE(c.verify.refinement_study);
}

TEST(Config, RejectsBadSettings) {
    EXPECT_THROW(io::parse_run_config("nonsense = 1"), ConfigError);
    EXPECT_THROW(io::parse_run_config("grid.nx = ten"), ConfigError);
    EXPECT_THROW(io::parse_run_config("fixed_point.theta = nan"), ConfigError);
    EXPECT_THROW(io::parse_run_config("fixed_point.max_iters = 0"), ConfigError);
    EXPECT_THROW(io::parse_run_config("hjb.advection = central"), ConfigError);
    EXPECT_THROW(io::parse_run_config("resume = maybe"), ConfigError);

    io::RunConfig c;
    c.nx = 2;
    EXPECT_THROW(io::validate_run_config(c), ConfigError);
    c = {};
    c.fixed_point.theta = 1.5;
    EXPECT_THROW(io::validate_run_config(c), ConfigError);
    c = {};
    c.x_min = 1.0;
    c.x_max = -1.0;
    EXPECT_THROW(io::validate_run_config(c), ConfigError);
    c = {};
    c.problem = "no-such-problem";
    EXPECT_THROW(io::validate_run_config(c), ConfigError);
}

TEST(Config, RefinementHalvesSpacingAndStep) {
    io::RunConfig c;
    c.problem = "lq-riccati";
    c.refine = 1;
    const auto [e, g] = io::validate_run_config(c);
    const auto base = e.grid.build();
    const auto fine = g.build();
    EXPECT_NEAR(fine.spacing(0), base.spacing(0) / 2, 1e-15);
    EXPECT_NEAR(fine.dt(), base.dt() / 2, 1e-15);
}

TEST(ProblemFile, SelectsFamilyAndParameters) {
    TempDir dir;
    {
        std::ofstream(dir.str("p.txt")) << "family = heat\nvariance0 = 0.5\nsigma = 1\ndim = 2\n";
    }
    const auto e = io::load_problem_file(dir.str("p.txt"));
    EXPECT_EQ(e.problem.dim, 2u);
    EXPECT_EQ(e.oracle.variance0, 0.5);
    EXPECT_EQ(e.oracle.sigma, 1.0);

    io::RunConfig c;
    c.problem = dir.str("p.txt");
    EXPECT_NO_THROW(io::validate_run_config(c));

    {
        std::ofstream(dir.str("q.txt")) << "family = lq-riccati\nkappa = 1\n";
    }
    EXPECT_THROW(io::load_problem_file(dir.str("q.txt")), ConfigError);
    {
        std::ofstream(dir.str("r.txt")) << "family = lq-riccati\nc = -1\n";
    }
    EXPECT_THROW(io::load_problem_file(dir.str("r.txt")), ConfigError);
    {
        std::ofstream(dir.str("s.txt")) << "c = 1\n";
    }
    EXPECT_THROW(io::load_problem_file(dir.str("s.txt")), ConfigError);
}

// ---- run driver ----

io::RunConfig small_run(const TempDir& dir) {
    io::RunConfig c;
    c.problem = "example5-weak";
    c.nx = 41;
    c.nt = 40;
    c.output_dir = dir.path().string();
    return c;
}

TEST(Run, ConfigErrorWritesNothing) {
    TempDir dir;
    auto c = small_run(dir);
    c.output_dir = (dir.path() / "out").string();
    c.nx = -5;
    std::ostringstream log;
    const auto r = io::run(c, io::RunMode::solve, true, log);
    EXPECT_EQ(r.exit_code, io::kExitConfigError);
    EXPECT_EQ(r.status, "config_error");
    EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST(Run, WritesArtifacts) {
    TempDir dir;
    std::ostringstream log;
    const auto r = io::run(small_run(dir), io::RunMode::solve, true, log);
    ASSERT_EQ(r.exit_code, io::kExitOk) << r.message;
    EXPECT_EQ(r.status, "ok_unverified");
    for (const char* f : {"summary.json", "u_field.csv", "m_flow.csv", "residuals.csv", "checkpoint.bin"}) {
        EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
    }
    EXPECT_FALSE(fs::exists(dir.path() / ".lock"));
    const auto summary = io::json::parse(slurp(dir.str("summary.json")));
    EXPECT_EQ(summary["schema"], io::kSummarySchema);
    EXPECT_TRUE(summary["fixed_point"]["converged"].get<bool>());
    const Grid g = build_grid(1, -6.0, 6.0, 41, 1.0, 40);
    const auto m = io::read_field_csv(dir.str("m_flow.csv"), g);
    EXPECT_NEAR(quadrature_mass(g, m.level(40)), 1.0, 1e-8);
}

TEST(Run, InterruptedThenResumedMatchesUninterrupted) {
    TempDir full, split;
    std::ostringstream log;
    ASSERT_EQ(io::run(small_run(full), io::RunMode::solve, true, log).exit_code, io::kExitOk);

    auto c = small_run(split);
    c.stop_after = 2;
    const auto first = io::run(c, io::RunMode::solve, true, log);
    ASSERT_EQ(first.exit_code, io::kExitOk);
    EXPECT_EQ(first.status, "interrupted");
    c.stop_after.reset();
    const auto second = io::run(c, io::RunMode::resume, true, log);
    ASSERT_EQ(second.exit_code, io::kExitOk) << second.message;
    EXPECT_EQ(slurp(split.str("u_field.csv")), slurp(full.str("u_field.csv")));
    EXPECT_EQ(slurp(split.str("m_flow.csv")), slurp(full.str("m_flow.csv")));
    EXPECT_EQ(slurp(split.str("residuals.csv")), slurp(full.str("residuals.csv")));
}

TEST(Run, ResumeNeedsAMatchingCheckpoint) {
    TempDir dir;
    std::ostringstream log;
    auto c = small_run(dir);
    EXPECT_EQ(io::run(c, io::RunMode::resume, true, log).exit_code, io::kExitConfigError);
    ASSERT_EQ(io::run(c, io::RunMode::solve, true, log).exit_code, io::kExitOk);
    c.fixed_point.theta = 0.75;
    EXPECT_EQ(io::run(c, io::RunMode::resume, true, log).exit_code, io::kExitConfigError);
    c.fixed_point.theta = 0.5;
    c.nt = 41;
    EXPECT_EQ(io::run(c, io::RunMode::verify, true, log).exit_code, io::kExitConfigError);
}

TEST(Run, LockedDirectoryIsRefused) {
    TempDir dir;
    { std::ofstream(dir.str(".lock")) << "locked\n"; }
    std::ostringstream log;
    const auto r = io::run(small_run(dir), io::RunMode::solve, true, log);
    EXPECT_EQ(r.exit_code, io::kExitLocked);
    EXPECT_FALSE(fs::exists(dir.path() / "summary.json"));
}

TEST(Run, NonConvergenceIsASolverFailure) {
    TempDir dir;
    auto c = small_run(dir);
    c.fixed_point.max_iters = 1;
    std::ostringstream log;
    const auto r = io::run(c, io::RunMode::solve, true, log);
    EXPECT_EQ(r.exit_code, io::kExitSolverFailure);
    EXPECT_EQ(r.status, "not_converged");
    EXPECT_TRUE(fs::exists(dir.path() / "summary.json"));
}

TEST(Run, VerificationOnDecoupledProblem) {
    TempDir dir;
    io::RunConfig c;
    c.problem = "decoupled-hopfcole";
    c.output_dir = dir.path().string();
    c.verify.particles = 20000;
    c.verify.cost_paths = 2000;
    c.verify.perturbations = 1;
    c.verify.assumption_samples = 50;
    std::ostringstream log;
    const auto r = io::run(c, io::RunMode::solve, false, log);
    EXPECT_EQ(r.exit_code, io::kExitOk) << r.message << '\n' << r.summary["checks"].dump(1);
    bool saw_oracle = false;
    for (const auto& chk : r.summary["checks"]) {
        if (chk["name"] == "hjb_oracle_max_err") saw_oracle = true;
    }
    EXPECT_TRUE(saw_oracle);

    const auto again = io::run(c, io::RunMode::verify, false, log);
    EXPECT_EQ(again.exit_code, io::kExitOk) << again.message;
    EXPECT_EQ(again.summary["verification"]["oracle"]["hjb_oracle_max_err"],
              r.summary["verification"]["oracle"]["hjb_oracle_max_err"]);
}

}  // namespace
}  // namespace mfg
