#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "stefan/numerics.hpp"

namespace stefan::detail {

/// Boundary condition on the unit grid: fixed value, or fixed slope d/dxi.
struct GridBoundary {
    enum class Kind { dirichlet, neumann };
    Kind kind{Kind::dirichlet};
    double value{};
};

/**
 * Frozen-coefficient operator of an immobilized phase:
 *
 *   L u = a u'' + b(xi) u',   b(xi) = advection_offset + advection_slope * xi
 *
 * discretized with centred differences on n+1 uniform nodes of [0, 1].
 * Neumann ends use a ghost node so the boundary row stays second order.
 */
struct PhaseOperator {
    double diffusion{};
    double advection_offset{};
    double advection_slope{};
    GridBoundary left{};
    GridBoundary right{};
};

/// Scratch storage reused across steps.
struct ThetaWorkspace {
    std::vector<double> lower, diag, upper, rhs;

    void resize(std::size_t n) {
        if (rhs.size() == n) return;
        lower.resize(n);
        diag.resize(n);
        upper.resize(n);
        rhs.resize(n);
    }
};

/**
 * One theta-step (theta = 1/2 is Crank-Nicolson) of u_t = L u.
 * Writes the new profile to `out` (may not alias `in`).
 */
inline void theta_step(const PhaseOperator& op, std::span<const double> in, std::span<double> out,
                       double dt, double theta, ThetaWorkspace& ws) {
    const std::size_t m = in.size();
    const std::size_t n = m - 1;
    const double h = 1.0 / static_cast<double>(n);
    const double d = op.diffusion / (h * h);
    const double half_inv_h = 0.5 / h;
    const double ti = theta * dt;
    const double te = (1.0 - theta) * dt;
    ws.resize(m);

    // Row i of L: lo*u[i-1] + di*u[i] + up*u[i+1] (+ f at Neumann ends).
    const double di = -2.0 * d;
    auto advect = [&](std::size_t i) {
        return (op.advection_offset + op.advection_slope * static_cast<double>(i) * h) * half_inv_h;
    };

    for (std::size_t i = 1; i < n; ++i) {
        const double b = advect(i);
        const double lo = d - b;
        const double up = d + b;
        ws.lower[i] = -ti * lo;
        ws.diag[i] = 1.0 - ti * di;
        ws.upper[i] = -ti * up;
        ws.rhs[i] = in[i] + te * (lo * in[i - 1] + di * in[i] + up * in[i + 1]);
    }

    if (op.left.kind == GridBoundary::Kind::dirichlet) {
        ws.lower[0] = 0.0;
        ws.diag[0] = 1.0;
        ws.upper[0] = 0.0;
        ws.rhs[0] = op.left.value;
    } else {
        // ghost u[-1] = u[1] - 2h g
        const double b = advect(0);
        const double lo = d - b;
        const double up = d + b + lo;
        const double f = -2.0 * h * op.left.value * lo;
        ws.lower[0] = 0.0;
        ws.diag[0] = 1.0 - ti * di;
        ws.upper[0] = -ti * up;
        ws.rhs[0] = in[0] + te * (di * in[0] + up * in[1]) + dt * f;
    }

    if (op.right.kind == GridBoundary::Kind::dirichlet) {
        ws.lower[n] = 0.0;
        ws.diag[n] = 1.0;
        ws.upper[n] = 0.0;
        ws.rhs[n] = op.right.value;
    } else {
        // ghost u[n+1] = u[n-1] + 2h g
        const double b = advect(n);
        const double up = d + b;
        const double lo = d - b + up;
        const double f = 2.0 * h * op.right.value * up;
        ws.lower[n] = -ti * lo;
        ws.diag[n] = 1.0 - ti * di;
        ws.upper[n] = 0.0;
        ws.rhs[n] = in[n] + te * (lo * in[n - 1] + di * in[n]) + dt * f;
    }

    numerics::solve_tridiagonal(ws.lower, ws.diag, ws.upper, ws.rhs);
    std::copy(ws.rhs.begin(), ws.rhs.end(), out.begin());
}

}  // namespace stefan::detail
