#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "stefan/error.hpp"

namespace stefan::numerics {

/// Nodes i/n for i = 0..n on the unit interval.
inline std::vector<double> unit_nodes(std::size_t n) {
    std::vector<double> xi(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        xi[i] = static_cast<double>(i) / static_cast<double>(n);
    }
    xi[n] = 1.0;
    return xi;
}

/// Composite trapezoidal rule for samples on a uniform grid of spacing h.
inline double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double sum = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) sum += f[i];
    return sum * h;
}

/// Trapezoidal integral of f^2.
inline double trapezoid_squared(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double sum = 0.5 * (f.front() * f.front() + f.back() * f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) sum += f[i] * f[i];
    return sum * h;
}

/// Second-order one-sided derivative at the last node: (3f[n]-4f[n-1]+f[n-2])/(2h).
inline double backward_slope(std::span<const double> f, double h) {
    assert(f.size() >= 3);
    const std::size_t n = f.size() - 1;
    return (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
}

/// Second-order one-sided derivative at the first node: (-3f[0]+4f[1]-f[2])/(2h).
inline double forward_slope(std::span<const double> f, double h) {
    assert(f.size() >= 3);
    return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
}

/**
 * Kahan-compensated x + dx. `carry` keeps the low-order part lost to
 * rounding so that many increments below ulp(x) still accumulate.
 */
inline double compensated_add(double x, double dx, double& carry) {
    const double y = dx - carry;
    const double sum = x + y;
    carry = (sum - x) - y;
    return sum;
}

/**
 * Thomas algorithm for a tridiagonal system.
 *
 * lower[0] and upper[n-1] are ignored. rhs is overwritten with the solution;
 * diag is used as scratch. Throws NumericalError on a vanishing pivot.
 */
inline void solve_tridiagonal(std::span<const double> lower, std::span<double> diag,
                              std::span<const double> upper, std::span<double> rhs) {
    const std::size_t n = diag.size();
    assert(lower.size() == n && upper.size() == n && rhs.size() == n);
    if (n == 0) return;
    constexpr double tiny = 1e-300;
    if (std::abs(diag[0]) < tiny) throw NumericalError("tridiagonal solve: zero pivot at row 0");
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
        if (std::abs(diag[i]) < tiny || !std::isfinite(diag[i])) {
            throw NumericalError("tridiagonal solve: zero pivot at row " + std::to_string(i));
        }
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

/// Linear interpolation of a tabulated function; clamps outside the table.
inline double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x) {
    assert(xs.size() == ys.size() && !xs.empty());
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    std::size_t hi = 1;
    while (xs[hi] < x) ++hi;
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return (1.0 - w) * ys[lo] + w * ys[hi];
}

}  // namespace stefan::numerics
