#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stefan/domain.hpp"
#include "stefan/error.hpp"
#include "stefan/material.hpp"
#include "stefan/numerics.hpp"
#include "stefan/one_phase.hpp"
#include "stefan/schedule.hpp"
#include "stefan/two_phase.hpp"

namespace stefan {

enum class Phase { one_phase, two_phase };

/// Gain and setpoint of the energy-shaping controller.
struct ControllerConfig {
    double gain{};      ///< c [1/s]
    double setpoint{};  ///< s_r [m]
    Phase phase{Phase::one_phase};
};

// ---------------------------------------------------------------------------
// Internal energy

/// (k/alpha) int_0^s u dx + (k/beta)(s - s_r)  [J/m^2]
inline double internal_energy(const OnePhaseState& st, const MaterialParams& p, const ControllerConfig& cfg) {
    const double sensible = numerics::trapezoid(st.u, st.dx());
    return p.conductivity() / p.alpha() * sensible + p.conductivity() / p.beta() * (st.s - cfg.setpoint);
}

/// Shifted two-phase energy, zero at the target:
/// (k_l/alpha_l) int u + (k_s/alpha_s) int v + gamma (s - s_r).
inline double internal_energy(const TwoPhaseState& st, const TwoPhaseParams& p, const ControllerConfig& cfg) {
    const auto& l = p.liquid();
    const auto& s = p.solid();
    return l.conductivity() / l.alpha() * numerics::trapezoid(st.u, st.liquid_dx()) +
           s.conductivity() / s.alpha() * numerics::trapezoid(st.v, st.solid_dx()) +
           p.gamma() * (st.s - cfg.setpoint);
}

/// Continuous-time law q = -c * E.
template <class State, class Params>
double nominal_control(const State& st, const Params& p, const ControllerConfig& cfg) {
    return -cfg.gain * internal_energy(st, p, cfg);
}

// ---------------------------------------------------------------------------
// Zero-order hold

/// Held input of the sampled-data loop.
struct ControllerState {
    std::size_t interval{0};     ///< j
    double held_flux{0.0};       ///< q_j [W/m^2]
    double sampled_energy{0.0};  ///< E_j [J/m^2]
    double next_instant{0.0};    ///< t_{j+1} (t_0 before the first sample)
    bool started{false};
};

/**
 * Samples the state at t_j and returns the updated hold, q_j = -c E(t_j).
 * The state time must coincide with the scheduled instant.
 */
template <class State, class Params>
ControllerState zoh_sample(const ControllerState& ctrl, const State& st, const Params& p,
                           const ControllerConfig& cfg, const Schedule& sched) {
    const std::size_t j = ctrl.started ? ctrl.interval + 1 : 0;
    if (j >= sched.size()) throw ContractViolation("sampling beyond the end of the schedule");
    const double tj = sched.instants[j];
    const double tol = 1e-9 * std::max(1.0, std::abs(tj));
    if (std::abs(st.t - tj) > tol) {
        throw ContractViolation("zoh_sample called off-schedule: t = " + to_text(st.t) +
                                ", expected t_j = " + to_text(tj));
    }
    ControllerState next;
    next.interval = j;
    next.started = true;
    next.sampled_energy = internal_energy(st, p, cfg);
    next.held_flux = -cfg.gain * next.sampled_energy;
    next.next_instant = (j + 1 < sched.size()) ? sched.instants[j + 1] : std::numeric_limits<double>::infinity();
    return next;
}

/**
 * Open-loop input equivalent to the sampled loop:
 * q_0 = -c E_0, q_j = q_0 prod_{i<j} (1 - c tau_i). One value per schedule gap.
 */
inline std::vector<double> open_loop_sequence(double initial_energy, double gain, const Schedule& sched) {
    if (!(gain * sched.upper_diameter < 1.0)) {
        throw ConfigError("gain error: open-loop sequence requires c*R < 1");
    }
    std::vector<double> q;
    const std::size_t n = sched.size() > 0 ? sched.size() - 1 : 0;
    q.reserve(n);
    double value = -gain * initial_energy;
    for (std::size_t j = 0; j < n; ++j) {
        q.push_back(value);
        value *= (1.0 - gain * sched.gap(j));
    }
    return q;
}

// ---------------------------------------------------------------------------
// Hypothesis checks

/// Lower bound on reachable setpoints: s0 + (beta/alpha) int_0^s0 (T0 - Tm) dx.
inline double setpoint_lower_bound(const InitialData& init, const DomainSpec& dom, const MaterialParams& p) {
    const auto u = sample_profile(init.liquid, 0.0, init.s0, dom.grid_points);
    const double h = init.s0 / static_cast<double>(dom.grid_points);
    return init.s0 + p.beta() / p.alpha() * numerics::trapezoid(u, h);
}

/// One-phase setpoint condition: lower bound < s_r < L.
inline Violations validate_setpoint(const InitialData& init, const ControllerConfig& cfg, const MaterialParams& p,
                                    const DomainSpec& dom) {
    Violations out;
    const double lower = setpoint_lower_bound(init, dom, p);
    if (!(cfg.setpoint > lower)) {
        out.push_back({"setpoint_unreachable",
                       "setpoint condition violated: setpoint unreachable without freezing (s_r = " +
                           to_text(cfg.setpoint) + " m must exceed s0 + (beta/alpha) int (T0 - Tm) dx = " +
                           to_text(lower) + " m)"});
    }
    if (!(cfg.setpoint < dom.length)) {
        out.push_back({"setpoint_outside_domain", "setpoint condition violated: s_r = " +
                                                      to_text(cfg.setpoint) + " m must be below L = " +
                                                      to_text(dom.length) + " m"});
    }
    return out;
}

/// Two-phase setpoint condition: s_inf < s_r < L, plus 0 < s_inf < L.
inline Violations validate_setpoint_two_phase(const InitialData& init, const ControllerConfig& cfg,
                                              const TwoPhaseParams& p, const DomainSpec& dom) {
    Violations out;
    const double s_inf = s_infinity(init, dom, p);
    if (!(s_inf > 0.0 && s_inf < dom.length)) {
        out.push_back({"s_inf_outside_domain", "zero-input limit s_inf = " + to_text(s_inf) +
                                                   " m must lie in (0, L)"});
    }
    if (!(cfg.setpoint > s_inf)) {
        out.push_back({"setpoint_unreachable", "setpoint condition violated: s_r = " + to_text(cfg.setpoint) +
                                                   " m must exceed s_inf = " + to_text(s_inf) + " m"});
    }
    if (!(cfg.setpoint < dom.length)) {
        out.push_back({"setpoint_outside_domain", "setpoint condition violated: s_r must be below L"});
    }
    return out;
}

/// b = min{alpha/s_r^2, c}/8 [1/s].
inline double decay_rate_bound(const ControllerConfig& cfg, const MaterialParams& p) {
    return std::min(p.alpha() / (cfg.setpoint * cfg.setpoint), cfg.gain) / 8.0;
}

/// b = min{alpha_l/L^2, 4 alpha_s/L^2, c}/8 [1/s].
inline double decay_rate_bound(const ControllerConfig& cfg, const TwoPhaseParams& p, const DomainSpec& dom) {
    const double L2 = dom.length * dom.length;
    return std::min({p.liquid().alpha() / L2, 4.0 * p.solid().alpha() / L2, cfg.gain}) / 8.0;
}

// ---------------------------------------------------------------------------
// Flux sources driving the simulation loop

/**
 * Boundary input seen by the solver. Switching instants are breakpoints the
 * time stepper lands on exactly; on_switch is called with the state there.
 */
template <class State>
class FluxSource {
public:
    virtual ~FluxSource() = default;
    virtual std::span<const double> switching_times() const { return {}; }
    virtual void on_switch(std::size_t /*j*/, const State& /*st*/) {}
    /// Flux applied over [t0, t1].
    virtual double flux(double t0, double t1) const = 0;
    /// Sampled energy at the latest switch, if the source samples the state.
    virtual std::optional<double> sampled_energy() const { return std::nullopt; }
};

/// Zero-order hold of q = -c E on a schedule.
template <class State, class Params>
class ZohController final : public FluxSource<State> {
public:
    ZohController(Params params, ControllerConfig cfg, Schedule sched)
        : params_(std::move(params)), cfg_(cfg), sched_(std::move(sched)) {}

    std::span<const double> switching_times() const override { return sched_.instants; }
    void on_switch(std::size_t /*j*/, const State& st) override {
        state_ = zoh_sample(state_, st, params_, cfg_, sched_);
    }
    double flux(double, double) const override { return state_.held_flux; }
    std::optional<double> sampled_energy() const override { return state_.sampled_energy; }

    const ControllerState& state() const { return state_; }
    const Schedule& schedule() const { return sched_; }

private:
    Params params_;
    ControllerConfig cfg_;
    Schedule sched_;
    ControllerState state_{};
};

/// Prescribed piecewise-constant input, one value per schedule gap.
template <class State>
class PiecewiseConstantInput final : public FluxSource<State> {
public:
    PiecewiseConstantInput(Schedule sched, std::vector<double> values)
        : sched_(std::move(sched)), values_(std::move(values)) {
        if (values_.size() + 1 < sched_.size()) {
            throw ConfigError("piecewise-constant input needs one value per sampling interval");
        }
    }
    std::span<const double> switching_times() const override { return sched_.instants; }
    void on_switch(std::size_t j, const State&) override { current_ = j < values_.size() ? values_[j] : 0.0; }
    double flux(double, double) const override { return current_; }

private:
    Schedule sched_;
    std::vector<double> values_;
    double current_{0.0};
};

/// Continuous input q(t), evaluated at the step midpoint.
template <class State>
class FunctionInput final : public FluxSource<State> {
public:
    explicit FunctionInput(std::function<double(double)> q) : q_(std::move(q)) {}
    double flux(double t0, double t1) const override { return q_(0.5 * (t0 + t1)); }

private:
    std::function<double(double)> q_;
};

}  // namespace stefan
