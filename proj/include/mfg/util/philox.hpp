#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfg {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// A draw is a pure function of (key, counter), so the random numbers consumed by
// particle i at step k are the same no matter which thread simulates it or in what order.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
    explicit constexpr Philox4x32(const Key& key) noexcept : key_(key) {}

    constexpr Counter operator()(Counter ctr) const noexcept {
        Key key = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }

    /// Four uniforms in the open interval (0, 1).
    std::array<double, 4> uniforms(const Counter& ctr) const noexcept {
        const Counter r = (*this)(ctr);
        std::array<double, 4> u{};
        for (int i = 0; i < 4; ++i) u[i] = (static_cast<double>(r[i]) + 0.5) * 0x1p-32;
        return u;
    }

    /// Four independent standard normals via Box-Muller on one counter block.
    std::array<double, 4> normals(const Counter& ctr) const noexcept {
        const auto u = uniforms(ctr);
        std::array<double, 4> z{};
        for (int i = 0; i < 2; ++i) {
            const double r = std::sqrt(-2.0 * std::log(u[2 * i]));
            const double theta = 2.0 * std::numbers::pi * u[2 * i + 1];
            z[2 * i] = r * std::cos(theta);
            z[2 * i + 1] = r * std::sin(theta);
        }
        return z;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57;
    static constexpr std::uint32_t kW0 = 0x9E3779B9;
    static constexpr std::uint32_t kW1 = 0xBB67AE85;

    static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    Key key_;
};

/// Stream tags keep independent uses of one seed apart.
enum class StreamTag : std::uint32_t {
    initial_sample = 1,
    increment = 2,
    rejection = 3,
    assumption_sample = 4,
    perturbation = 5,
};

/// Counter for (tag, item, step, block).
inline constexpr Philox4x32::Counter make_counter(StreamTag tag, std::uint64_t item, std::uint32_t step,
                                                  std::uint32_t block = 0) noexcept {
    return {static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(item >> 32), step,
            (static_cast<std::uint32_t>(tag) << 24) | (block & 0xFFFFFFu)};
}

/// Sequential draws from one (tag, item, step) substream; each refill consumes one block.
class RandomStream {
public:
    RandomStream(const Philox4x32& gen, StreamTag tag, std::uint64_t item, std::uint32_t step = 0) noexcept
        : gen_(gen), tag_(tag), item_(item), step_(step) {}

    double uniform() noexcept {
        if (upos_ == 4) {
            ubuf_ = gen_.uniforms(make_counter(tag_, item_, step_, block_++));
            upos_ = 0;
        }
        return ubuf_[upos_++];
    }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double normal() noexcept {
        if (npos_ == 4) {
            nbuf_ = gen_.normals(make_counter(tag_, item_, step_, block_++));
            npos_ = 0;
        }
        return nbuf_[npos_++];
    }

private:
    Philox4x32 gen_;
    StreamTag tag_;
    std::uint64_t item_;
    std::uint32_t step_;
    std::uint32_t block_ = 0;
    std::array<double, 4> ubuf_{};
    std::array<double, 4> nbuf_{};
    int upos_ = 4;
    int npos_ = 4;
};

}  // namespace mfg
