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

/// Liquid and solid constants sharing one melting temperature.
class TwoPhaseParams {
public:
    static TwoPhaseParams make(const MaterialParams& liquid, const MaterialParams& solid) {
        if (liquid.melting_temp() != solid.melting_temp()) {
            throw ParameterError("liquid and solid must share the melting temperature");
        }
        TwoPhaseParams p(liquid, solid);
        return p;
    }

    const MaterialParams& liquid() const { return liquid_; }
    const MaterialParams& solid() const { return solid_; }
    double melting_temp() const { return liquid_.melting_temp(); }
    /// gamma = rho_l * dH [J/m^3].
    double gamma() const { return liquid_.volumetric_latent_heat(); }

private:
    TwoPhaseParams(MaterialParams l, MaterialParams s) : liquid_(l), solid_(s) {}
    MaterialParams liquid_;
    MaterialParams solid_;
};

/**
 * Two-phase state. u lives on xi = x/s in [0,1] (liquid, u = T_l - Tm) and
 * v on eta = (x - s)/(L - s) in [0,1] (solid, v = T_s - Tm). u.back() and
 * v.front() are pinned at zero.
 */
struct TwoPhaseState {
    double t{};
    double s{};
    double length{};
    std::vector<double> u;
    std::vector<double> v;
    double sdot{};
    double s_carry{};  ///< rounding residue of s from compensated updates

    double liquid_dx() const { return s / static_cast<double>(u.size() - 1); }
    double solid_dx() const { return (length - s) / static_cast<double>(v.size() - 1); }
};

/// Liquid-side gradient T_l,x at the interface [K/m].
inline double liquid_interface_gradient(const TwoPhaseState& st) {
    return numerics::backward_slope(st.u, st.liquid_dx());
}

/// Solid-side gradient T_s,x at the interface [K/m].
inline double solid_interface_gradient(const TwoPhaseState& st) {
    return numerics::forward_slope(st.v, st.solid_dx());
}

/// gamma sdot = -k_l T_l,x(s) + k_s T_s,x(s).
inline double stefan_velocity(const TwoPhaseState& st, const TwoPhaseParams& p) {
    return (-p.liquid().conductivity() * liquid_interface_gradient(st) +
            p.solid().conductivity() * solid_interface_gradient(st)) /
           p.gamma();
}

/// Closest the interface may come to x = L before the run is declared phase-exhausted.
inline double solid_guard(const DomainSpec& dom) {
    return 10.0 * dom.length / static_cast<double>(dom.solid_grid_points);
}

inline TwoPhaseState make_two_phase_state(const InitialData& init, const DomainSpec& dom,
                                          const TwoPhaseParams& p) {
    dom.validate();
    if (auto v = validate_initial_data_two_phase(init, dom); !v.empty()) {
        throw ConfigError("invalid two-phase initial data: " + join_messages(v));
    }
    if (init.s0 < minimum_start(dom)) {
        throw ConfigError("degenerate start: s0 below L/N_l");
    }
    if (dom.length - init.s0 <= solid_guard(dom)) {
        throw ConfigError("degenerate start: solid layer thinner than 10 L/N_s");
    }
    TwoPhaseState st;
    st.t = 0.0;
    st.s = init.s0;
    st.length = dom.length;
    st.u = sample_profile(init.liquid, 0.0, init.s0, dom.grid_points);
    st.v = sample_profile(init.solid, init.s0, dom.length, dom.solid_grid_points);
    st.u.back() = 0.0;
    st.v.front() = 0.0;
    st.sdot = stefan_velocity(st, p);
    return st;
}

/**
 * s_inf = s0 + (k_l/(alpha_l gamma)) int_0^s0 u0 dx + (k_s/(alpha_s gamma)) int_s0^L v0 dx,
 * the interface position reached under zero input. Trapezoidal quadrature on
 * the solver grids.
 */
inline double s_infinity(const InitialData& init, const DomainSpec& dom, const TwoPhaseParams& p) {
    const auto u = sample_profile(init.liquid, 0.0, init.s0, dom.grid_points);
    const auto v = sample_profile(init.solid, init.s0, dom.length, dom.solid_grid_points);
    const double hu = init.s0 / static_cast<double>(dom.grid_points);
    const double hv = (dom.length - init.s0) / static_cast<double>(dom.solid_grid_points);
    const auto& l = p.liquid();
    const auto& s = p.solid();
    return init.s0 + l.conductivity() / (l.alpha() * p.gamma()) * numerics::trapezoid(u, hu) +
           s.conductivity() / (s.alpha() * p.gamma()) * numerics::trapezoid(v, hv);
}

/**
 * Crank-Nicolson stepper for both immobilized phases with a shared
 * predictor-corrector on the interface, mirroring OnePhaseSolver.
 * Solid: v_t = (alpha_s/(L-s)^2) v_etaeta + (sdot (1-eta)/(L-s)) v_eta, v_eta(1) = 0.
 */
class TwoPhaseSolver {
public:
    TwoPhaseSolver(TwoPhaseParams params, DomainSpec dom) : params_(params), dom_(dom) {}

    const TwoPhaseParams& params() const { return params_; }
    const DomainSpec& domain() const { return dom_; }

    double suggested_dt(const TwoPhaseState& st) const {
        const double hl = st.liquid_dx();
        const double hs = st.solid_dx();
        const double D = dom_.dt_policy.diffusion_number;
        return std::min({D * hl * hl / params_.liquid().alpha(), D * hs * hs / params_.solid().alpha(),
                         dom_.dt_policy.max_dt});
    }

    void advance(TwoPhaseState& st, double q, double dt) {
        if (!(dt > 0.0) || !std::isfinite(q)) {
            throw ContractViolation("step requires dt > 0 and finite flux");
        }
        u_pred_.resize(st.u.size());
        v_pred_.resize(st.v.size());
        u_new_.resize(st.u.size());
        v_new_.resize(st.v.size());

        const double s_old = st.s;
        const double v_old = stefan_velocity(st, params_);

        double s_new = s_old + dt * v_old;
        check_interface(s_new, st.t + dt);
        solve(st, u_pred_, v_pred_, s_old, s_new, q, dt);

        const double hl = s_new / static_cast<double>(st.u.size() - 1);
        const double hs = (st.length - s_new) / static_cast<double>(st.v.size() - 1);
        const double v_pred = (-params_.liquid().conductivity() * numerics::backward_slope(u_pred_, hl) +
                               params_.solid().conductivity() * numerics::forward_slope(v_pred_, hs)) /
                              params_.gamma();

        double carry = st.s_carry;
        s_new = numerics::compensated_add(s_old, 0.5 * dt * (v_old + v_pred), carry);
        check_interface(s_new, st.t + dt);
        solve(st, u_new_, v_new_, s_old, s_new, q, dt);

        for (double x : u_new_) {
            if (!std::isfinite(x)) throw NumericalError("non-finite liquid temperature");
        }
        for (double x : v_new_) {
            if (!std::isfinite(x)) throw NumericalError("non-finite solid temperature");
        }
        st.u.swap(u_new_);
        st.v.swap(v_new_);
        st.u.back() = 0.0;
        st.v.front() = 0.0;
        st.s = s_new;
        st.s_carry = carry;
        st.t += dt;
        st.sdot = stefan_velocity(st, params_);
    }

private:
    void check_interface(double s, double t) const {
        if (!(s > 0.0) || !(s < dom_.length - solid_guard(dom_)) || !std::isfinite(s)) {
            throw DomainExhaustedError("phase exhausted at t = " + to_text(t) +
                                       " s (s = " + to_text(s) + " m)");
        }
    }

    void solve(const TwoPhaseState& st, std::span<double> u_out, std::span<double> v_out, double s_old,
               double s_new, double q, double dt) {
        const double s_mid = 0.5 * (s_old + s_new);
        const double v_mid = (s_new - s_old) / dt;
        const double solid_len = st.length - s_mid;

        detail::PhaseOperator liquid;
        liquid.diffusion = params_.liquid().alpha() / (s_mid * s_mid);
        liquid.advection_slope = v_mid / s_mid;
        liquid.left = {detail::GridBoundary::Kind::neumann, -s_mid * q / params_.liquid().conductivity()};
        liquid.right = {detail::GridBoundary::Kind::dirichlet, 0.0};
        detail::theta_step(liquid, st.u, u_out, dt, 0.5, ws_);

        detail::PhaseOperator solid;
        solid.diffusion = params_.solid().alpha() / (solid_len * solid_len);
        solid.advection_offset = v_mid / solid_len;
        solid.advection_slope = -v_mid / solid_len;
        solid.left = {detail::GridBoundary::Kind::dirichlet, 0.0};
        solid.right = {detail::GridBoundary::Kind::neumann, 0.0};
        detail::theta_step(solid, st.v, v_out, dt, 0.5, ws_);
    }

    TwoPhaseParams params_;
    DomainSpec dom_;
    detail::ThetaWorkspace ws_;
    std::vector<double> u_pred_, v_pred_, u_new_, v_new_;
};

inline TwoPhaseState step_two_phase(const TwoPhaseState& st, double q, double dt, const TwoPhaseParams& p,
                                    const DomainSpec& dom) {
    TwoPhaseSolver solver(p, dom);
    TwoPhaseState next = st;
    solver.advance(next, q, dt);
    return next;
}

}  // namespace stefan
