#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace mfg {

/// Largest supported spatial dimension.
inline constexpr std::size_t kMaxDim = 2;

/// A point or vector in R^n, n <= 2. Unused trailing components are kept at zero.
using Vec = std::array<double, kMaxDim>;

/// A dense n x n matrix (row major), n <= 2.
using Mat = std::array<std::array<double, kMaxDim>, kMaxDim>;

inline constexpr Vec zero_vec() noexcept { return Vec{0.0, 0.0}; }

inline constexpr Mat zero_mat() noexcept { return Mat{{{0.0, 0.0}, {0.0, 0.0}}}; }

inline constexpr Mat scaled_identity(double s, std::size_t dim) noexcept {
    Mat m = zero_mat();
    for (std::size_t d = 0; d < dim; ++d) m[d][d] = s;
    return m;
}

inline constexpr Vec operator+(const Vec& a, const Vec& b) noexcept { return {a[0] + b[0], a[1] + b[1]}; }
inline constexpr Vec operator-(const Vec& a, const Vec& b) noexcept { return {a[0] - b[0], a[1] - b[1]}; }
inline constexpr Vec operator*(double s, const Vec& a) noexcept { return {s * a[0], s * a[1]}; }
inline constexpr Vec operator-(const Vec& a) noexcept { return {-a[0], -a[1]}; }

inline constexpr double dot(const Vec& a, const Vec& b) noexcept { return a[0] * b[0] + a[1] * b[1]; }

inline double norm(const Vec& a) noexcept { return std::sqrt(dot(a, a)); }

inline constexpr Vec mat_vec(const Mat& m, const Vec& v) noexcept {
    return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

/// a = 1/2 sigma sigma^T.
inline constexpr Mat diffusion_tensor(const Mat& sigma) noexcept {
    Mat a = zero_mat();
    for (std::size_t i = 0; i < kMaxDim; ++i) {
        for (std::size_t j = 0; j < kMaxDim; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < kMaxDim; ++k) s += sigma[i][k] * sigma[j][k];
            a[i][j] = 0.5 * s;
        }
    }
    return a;
}

inline bool all_finite(const Vec& v) noexcept { return std::isfinite(v[0]) && std::isfinite(v[1]); }

inline bool all_finite(const Mat& m) noexcept { return all_finite(m[0]) && all_finite(m[1]); }

}  // namespace mfg
