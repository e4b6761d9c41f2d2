#pragma once

#include <span>
#include <vector>

#include "ambig/error.hpp"

namespace ambig::pde {

/// Thomas algorithm for lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored. `scratch` must hold n doubles.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<const double> rhs,
                              std::span<double> x, std::span<double> scratch) {
    const std::size_t n = diag.size();
    if (n == 0) return;
    double denom = diag[0];
    if (denom == 0.0) fail(ErrorCode::IllConditioned, "singular tridiagonal system");
    scratch[0] = upper[0] / denom;
    x[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * scratch[i - 1];
        if (denom == 0.0) fail(ErrorCode::IllConditioned, "singular tridiagonal system");
        scratch[i] = i + 1 < n ? upper[i] / denom : 0.0;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= scratch[i] * x[i + 1];
}

}  // namespace ambig::pde
