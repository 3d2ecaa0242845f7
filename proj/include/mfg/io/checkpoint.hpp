#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/particle/particle.hpp"
#include "mfg/solver/mfg_solver.hpp"

namespace mfg::io {

// Layout, all integers and doubles little-endian:
//   "MFGK" | u32 version | u64 grid hash | u64 run fingerprint | u64 iteration
//   | u64 levels | u64 nodes | u64 history length | f64 history[]
//   | f64 mu[levels * nodes] | f64 last_input[levels * nodes] | f64 last_output[levels * nodes]
//   | f64 max_mass_drift | f64 min_density
inline constexpr char kCheckpointMagic[4] = {'M', 'F', 'G', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Ensemble snapshot: "MFGE" | u32 version | u64 grid hash | u64 seed | u64 particles
//   | u64 dim | u64 recorded levels | u64 level[] | f64 coordinates[level][particle][dim]
inline constexpr char kEnsembleMagic[4] = {'M', 'F', 'G', 'E'};
inline constexpr std::uint32_t kEnsembleVersion = 1;

class ByteWriter {
public:
    void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64s(const std::vector<double>& v) {
        for (double x : v) f64(x);
    }
    const std::vector<char>& bytes() const noexcept { return buf_; }

private:
    std::vector<char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<char> data) : buf_(std::move(data)) {}

    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw FormatError("file is truncated");
    }
    std::string_view raw(std::size_t n) {
        need(n);
        std::string_view s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<double> f64s(std::uint64_t n) {
        if (n > (buf_.size() - pos_) / 8) throw FormatError("file is truncated");
        std::vector<double> v(static_cast<std::size_t>(n));
        for (double& x : v) x = f64();
        return v;
    }
    bool at_end() const noexcept { return pos_ == buf_.size(); }

private:
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

/// Writes to a sibling temporary and renames, so a crash never leaves a half-written file.
inline void write_file_atomic(const std::string& path, const std::vector<char>& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open '" + tmp + "' for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw Error("write to '" + tmp + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<char> read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open '" + path + "'");
    return std::vector<char>(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

inline std::vector<char> encode_checkpoint(const Grid& grid, const FixedPointState& s, std::uint64_t fingerprint) {
    if (s.mu.levels() != grid.num_levels() || s.mu.nodes() != grid.num_nodes() || s.last_output.raw().size() != s.mu.raw().size()) {
        throw InvalidArgument("checkpoint state does not match the grid");
    }
    // Before the first evaluation there is no input yet; store the current iterate.
    const MeasureFlow& input = s.iteration > 0 ? s.last_input : s.mu;
    if (input.raw().size() != s.mu.raw().size()) throw InvalidArgument("checkpoint state has no last input flow");
    ByteWriter w;
    w.raw(kCheckpointMagic, 4);
    w.u32(kCheckpointVersion);
    w.u64(grid.hash());
    w.u64(fingerprint);
    w.u64(s.iteration);
    w.u64(s.mu.levels());
    w.u64(s.mu.nodes());
    w.u64(s.residual_history.size());
    w.f64s(s.residual_history);
    w.f64s(s.mu.raw());
    w.f64s(input.raw());
    w.f64s(s.last_output.raw());
    w.f64(s.max_mass_drift);
    w.f64(s.min_density);
    return w.bytes();
}

/// Throws FormatError on a bad magic, unknown version, truncation, trailing bytes, or a
/// grid or fingerprint other than the expected ones.
inline FixedPointState decode_checkpoint(std::vector<char> bytes, const Grid& grid, std::uint64_t fingerprint) {
    ByteReader r(std::move(bytes));
    if (r.raw(4) != std::string_view(kCheckpointMagic, 4)) throw FormatError("not a checkpoint (bad magic)");
    const auto version = r.u32();
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    if (r.u64() != grid.hash()) throw FormatError("checkpoint was written for a different grid");
    if (r.u64() != fingerprint) throw FormatError("checkpoint was written for a different problem or damping");
    FixedPointState s;
    s.iteration = static_cast<std::size_t>(r.u64());
    const auto levels = r.u64();
    const auto nodes = r.u64();
    if (levels != grid.num_levels() || nodes != grid.num_nodes()) throw FormatError("checkpoint shape does not match the grid");
    const auto hist = r.u64();
    if (hist != s.iteration) throw FormatError("checkpoint history length differs from its iteration counter");
    s.residual_history = r.f64s(hist);
    s.mu = MeasureFlow(levels, nodes);
    s.mu.raw() = r.f64s(levels * nodes);
    s.last_input = MeasureFlow(levels, nodes);
    s.last_input.raw() = r.f64s(levels * nodes);
    s.last_output = MeasureFlow(levels, nodes);
    s.last_output.raw() = r.f64s(levels * nodes);
    s.max_mass_drift = r.f64();
    s.min_density = r.f64();
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
    return s;
}

inline void write_checkpoint(const std::string& path, const Grid& grid, const FixedPointState& s, std::uint64_t fingerprint) {
    write_file_atomic(path, encode_checkpoint(grid, s, fingerprint));
}

inline FixedPointState read_checkpoint(const std::string& path, const Grid& grid, std::uint64_t fingerprint) {
    return decode_checkpoint(read_file(path), grid, fingerprint);
}

inline void write_ensemble(const std::string& path, const Grid& grid, const ParticleEnsemble& e) {
    ByteWriter w;
    w.raw(kEnsembleMagic, 4);
    w.u32(kEnsembleVersion);
    w.u64(grid.hash());
    w.u64(e.seed);
    w.u64(e.n_particles);
    w.u64(grid.dim());
    w.u64(e.levels.size());
    for (std::size_t k : e.levels) w.u64(k);
    for (const auto& slice : e.positions) {
        for (const Vec& x : slice) {
            for (std::size_t d = 0; d < grid.dim(); ++d) w.f64(x[d]);
        }
    }
    write_file_atomic(path, w.bytes());
}

inline ParticleEnsemble read_ensemble(const std::string& path, const Grid& grid) {
    ByteReader r(read_file(path));
    if (r.raw(4) != std::string_view(kEnsembleMagic, 4)) throw FormatError("not an ensemble snapshot (bad magic)");
    if (r.u32() != kEnsembleVersion) throw FormatError("unsupported ensemble snapshot version");
    if (r.u64() != grid.hash()) throw FormatError("ensemble was written for a different grid");
    ParticleEnsemble e;
    e.seed = r.u64();
    e.n_particles = static_cast<std::size_t>(r.u64());
    if (r.u64() != grid.dim()) throw FormatError("ensemble dimension does not match the grid");
    const auto nrec = r.u64();
    if (nrec > grid.num_levels()) throw FormatError("ensemble records more levels than the grid has");
    for (std::uint64_t i = 0; i < nrec; ++i) e.levels.push_back(static_cast<std::size_t>(r.u64()));
    e.positions.assign(e.levels.size(), std::vector<Vec>(e.n_particles, zero_vec()));
    for (auto& slice : e.positions) {
        for (Vec& x : slice) {
            for (std::size_t d = 0; d < grid.dim(); ++d) x[d] = r.f64();
        }
    }
    if (!r.at_end()) throw FormatError("trailing bytes after ensemble snapshot");
    return e;
}

}  // namespace mfg::io
