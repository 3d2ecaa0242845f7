#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfg/core/errors.hpp"

namespace mfg {

/// Tridiagonal system: lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored.
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    explicit Tridiagonal(std::size_t n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
    std::size_t size() const noexcept { return diag.size(); }
};

/// Thomas algorithm. Requires a diagonally dominant (or otherwise pivot-safe) system;
/// the M-matrices produced by the drift-diffusion assembly always are.
inline void solve_tridiagonal(const Tridiagonal& sys, std::span<const double> rhs, std::span<double> x,
                              std::vector<double>& scratch) {
    const std::size_t n = sys.size();
    scratch.resize(n);
    double denom = sys.diag[0];
    if (denom == 0.0 || !std::isfinite(denom)) throw SolverError("tridiagonal solve: singular pivot");
    scratch[0] = n > 1 ? sys.upper[0] / denom : 0.0;
    x[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = sys.diag[i] - sys.lower[i] * scratch[i - 1];
        if (denom == 0.0 || !std::isfinite(denom)) throw SolverError("tridiagonal solve: singular pivot");
        scratch[i] = i + 1 < n ? sys.upper[i] / denom : 0.0;
        x[i] = (rhs[i] - sys.lower[i] * x[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= scratch[i] * x[i + 1];
}

}  // namespace mfg
