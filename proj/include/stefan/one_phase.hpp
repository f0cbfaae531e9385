#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stefan/detail/phase_operator.hpp"
#include "stefan/domain.hpp"
#include "stefan/error.hpp"
#include "stefan/material.hpp"
#include "stefan/numerics.hpp"

namespace stefan {

/**
 * Liquid temperature and interface of the one-phase problem.
 *
 * u[i] = T - Tm at xi_i = i/N of the immobilized coordinate xi = x/s(t);
 * u[N] is pinned at zero (the interface sits at the melting temperature).
 */
struct OnePhaseState {
    double t{};
    double s{};
    std::vector<double> u;
    double sdot{};
    double s_carry{};  ///< rounding residue of s from compensated updates

    std::size_t intervals() const { return u.size() - 1; }
    /// Physical node spacing s/N [m].
    double dx() const { return s / static_cast<double>(intervals()); }
};

/// Stefan condition sdot = -beta * T_x(s), with a second-order one-sided stencil.
inline double interface_velocity(const OnePhaseState& st, const MaterialParams& p) {
    return -p.beta() * numerics::backward_slope(st.u, st.dx());
}

/// Liquid temperature at the heated boundary x = 0 [degC].
inline double boundary_temperature(const OnePhaseState& st, const MaterialParams& p) {
    return st.u.front() + p.melting_temp();
}

/**
 * Builds the initial state on the solver grid.
 *
 * Throws ConfigError when the initial data is inadmissible or the start is
 * too close to s = 0 to be resolved (s0 < L/N).
 */
inline OnePhaseState make_one_phase_state(const InitialData& init, const DomainSpec& dom,
                                          const MaterialParams& p) {
    dom.validate();
    if (auto v = validate_initial_data(init, dom, p); !v.empty()) {
        throw ConfigError("invalid initial data: " + join_messages(v));
    }
    if (init.s0 < minimum_start(dom)) {
        throw ConfigError("degenerate start: s0 = " + to_text(init.s0) +
                          " m is below L/N = " + to_text(minimum_start(dom)) +
                          " m; increase N or s0");
    }
    OnePhaseState st;
    st.t = 0.0;
    st.s = init.s0;
    st.u = sample_profile(init.liquid, 0.0, init.s0, dom.grid_points);
    st.u.back() = 0.0;
    st.sdot = interface_velocity(st, p);
    return st;
}

/**
 * Crank-Nicolson stepper for the immobilized one-phase problem
 *
 *   u_t = (alpha/s^2) u_xixi + (sdot xi / s) u_xi,  -k u_x(0) = q,  u(1) = 0.
 *
 * The interface is coupled by a two-pass predictor-corrector: a forward
 * Euler predictor for s, a CN solve with (s, sdot) frozen at the step
 * midpoint, then a trapezoidal corrector using the velocity of the
 * predicted profile and a second CN solve.
 */
class OnePhaseSolver {
public:
    OnePhaseSolver(MaterialParams params, DomainSpec dom) : params_(params), dom_(dom) {}

    const MaterialParams& params() const { return params_; }
    const DomainSpec& domain() const { return dom_; }

    /// Largest step allowed by the diffusion-number policy at the current interface.
    double suggested_dt(const OnePhaseState& st) const {
        const double dx = st.dx();
        return std::min(dom_.dt_policy.diffusion_number * dx * dx / params_.alpha(), dom_.dt_policy.max_dt);
    }

    /// Advances `st` in place by dt under constant boundary flux q [W/m^2].
    void advance(OnePhaseState& st, double q, double dt) {
        if (!(dt > 0.0) || !std::isfinite(q)) {
            throw ContractViolation("step requires dt > 0 and finite flux");
        }
        const std::size_t m = st.u.size();
        predicted_.resize(m);
        corrected_.resize(m);

        const double s_old = st.s;
        const double v_old = interface_velocity(st, params_);

        double s_new = s_old + dt * v_old;
        check_interface(s_new, st.t + dt);
        solve(st.u, predicted_, s_old, s_new, q, dt);

        const double v_pred = -params_.beta() * numerics::backward_slope(
                                                    predicted_, s_new / static_cast<double>(m - 1));
        double carry = st.s_carry;
        s_new = numerics::compensated_add(s_old, 0.5 * dt * (v_old + v_pred), carry);
        check_interface(s_new, st.t + dt);
        solve(st.u, corrected_, s_old, s_new, q, dt);

        for (double x : corrected_) {
            if (!std::isfinite(x)) throw NumericalError("non-finite temperature at t = " + to_text(st.t + dt));
        }
        st.u.swap(corrected_);
        st.u.back() = 0.0;
        st.s = s_new;
        st.s_carry = carry;
        st.t += dt;
        st.sdot = interface_velocity(st, params_);
    }

private:
    void check_interface(double s, double t) const {
        if (!(s > 0.0) || !(s < dom_.length) || !std::isfinite(s)) {
            throw DomainExhaustedError("interface left (0, L) at t = " + to_text(t) +
                                       " s (s = " + to_text(s) + " m)");
        }
    }

    void solve(std::span<const double> in, std::span<double> out, double s_old, double s_new, double q,
               double dt) {
        const double s_mid = 0.5 * (s_old + s_new);
        const double v_mid = (s_new - s_old) / dt;
        detail::PhaseOperator op;
        op.diffusion = params_.alpha() / (s_mid * s_mid);
        op.advection_offset = 0.0;
        op.advection_slope = v_mid / s_mid;
        op.left = {detail::GridBoundary::Kind::neumann, -s_mid * q / params_.conductivity()};
        op.right = {detail::GridBoundary::Kind::dirichlet, 0.0};
        detail::theta_step(op, in, out, dt, 0.5, ws_);
    }

    MaterialParams params_;
    DomainSpec dom_;
    detail::ThetaWorkspace ws_;
    std::vector<double> predicted_;
    std::vector<double> corrected_;
};

/// Value-semantics single step; see OnePhaseSolver::advance.
inline OnePhaseState step(const OnePhaseState& st, double q, double dt, const MaterialParams& p,
                          const DomainSpec& dom) {
    OnePhaseSolver solver(p, dom);
    OnePhaseState next = st;
    solver.advance(next, q, dt);
    return next;
}

}  // namespace stefan
