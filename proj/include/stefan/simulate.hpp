#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stefan/control.hpp"
#include "stefan/diagnostics.hpp"
#include "stefan/error.hpp"
#include "stefan/one_phase.hpp"
#include "stefan/trajectory.hpp"
#include "stefan/two_phase.hpp"

namespace stefan {

struct SimulationOptions {
    double horizon{};  ///< final time [s]
    /// Time between recorded rows [s]; rows are also written at every switching instant.
    double row_stride{std::numeric_limits<double>::infinity()};
    /// Setpoint (and gain, for V) used by the recorded diagnostics.
    ControllerConfig reference{};
    /// When set, each one-phase row also carries the Lyapunov functional V.
    std::optional<BacksteppingConfig> lyapunov{};
};

template <class State>
struct SimulationResult {
    Trajectory trajectory;
    State final_state;
};

namespace detail {

/// Caps the step at a twentieth of the shortest sampling gap unless a cap is set.
inline DomainSpec with_schedule_cap(DomainSpec dom, std::span<const double> switches) {
    if (std::isfinite(dom.dt_policy.max_dt) || switches.size() < 2) return dom;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < switches.size(); ++j) gap = std::min(gap, switches[j] - switches[j - 1]);
    dom.dt_policy.max_dt = gap / 20.0;
    return dom;
}

/// Step size that lands exactly on `target` without leaving a sliver step.
inline double snap_step(double t, double dt, double target, bool& lands) {
    const double remaining = target - t;
    lands = false;
    if (dt >= remaining * (1.0 - 1e-12)) {
        lands = true;
        return remaining;
    }
    if (remaining - dt < 0.25 * dt) return 0.5 * remaining;
    return dt;
}

struct OnePhaseHooks {
    const MaterialParams& params;
    const SimulationOptions& opts;

    double energy(const OnePhaseState& st) const { return internal_energy(st, params, opts.reference); }

    void monitor(StepMonitor& m, const OnePhaseState& st, double prev_s, double length, bool& valid) const {
        const double lowest = *std::min_element(st.u.begin(), st.u.end());
        m.min_liquid = std::min(m.min_liquid, lowest);
        m.min_boundary_offset = std::min(m.min_boundary_offset, st.u.front());
        m.min_s = std::min(m.min_s, st.s);
        m.max_s = std::max(m.max_s, st.s);
        m.max_s_decrease = std::max(m.max_s_decrease, prev_s - st.s);
        m.min_sdot = std::min(m.min_sdot, st.sdot);
        m.max_liquid_gradient = std::max(m.max_liquid_gradient, numerics::backward_slope(st.u, st.dx()));
        valid = lowest >= -kTolValid && st.s > 0.0 && st.s < length;
    }

    TrajectoryRow row(const OnePhaseState& st, double q, double energy, double cumulative, bool valid) const {
        TrajectoryRow r;
        r.t = st.t;
        r.s = st.s;
        r.sdot = st.sdot;
        r.q = q;
        r.boundary_temp = boundary_temperature(st, params);
        r.energy = energy;
        r.psi = psi_norm(st, opts.reference);
        if (opts.lyapunov) r.lyapunov = lyapunov_V(st, opts.reference, *opts.lyapunov);
        r.cumulative_input = cumulative;
        r.valid = valid;
        return r;
    }
};

struct TwoPhaseHooks {
    const TwoPhaseParams& params;
    const SimulationOptions& opts;

    double energy(const TwoPhaseState& st) const { return internal_energy(st, params, opts.reference); }

    void monitor(StepMonitor& m, const TwoPhaseState& st, double prev_s, double length, bool& valid) const {
        const double lowest = *std::min_element(st.u.begin(), st.u.end());
        const double highest = *std::max_element(st.v.begin(), st.v.end());
        m.min_liquid = std::min(m.min_liquid, lowest);
        m.max_solid = std::max(m.max_solid, highest);
        m.min_boundary_offset = std::min(m.min_boundary_offset, st.u.front());
        m.min_s = std::min(m.min_s, st.s);
        m.max_s = std::max(m.max_s, st.s);
        m.max_s_decrease = std::max(m.max_s_decrease, prev_s - st.s);
        m.min_sdot = std::min(m.min_sdot, st.sdot);
        m.max_liquid_gradient = std::max(m.max_liquid_gradient, liquid_interface_gradient(st));
        m.max_solid_gradient = std::max(m.max_solid_gradient, solid_interface_gradient(st));
        valid = lowest >= -kTolValid && highest <= kTolValid && st.s > 0.0 && st.s < length;
    }

    TrajectoryRow row(const TwoPhaseState& st, double q, double energy, double cumulative, bool valid) const {
        TrajectoryRow r;
        r.t = st.t;
        r.s = st.s;
        r.sdot = st.sdot;
        r.q = q;
        r.boundary_temp = st.u.front() + params.melting_temp();
        r.energy = energy;
        r.psi = psi_norm(st, opts.reference);
        r.solid_norm = solid_norm(st);
        r.cumulative_input = cumulative;
        r.valid = valid;
        return r;
    }
};

template <class Solver, class State, class Hooks>
SimulationResult<State> run(Solver& solver, State st, FluxSource<State>& source, const SimulationOptions& opts,
                            const Hooks& hooks, Trajectory traj) {
    if (!(opts.horizon > 0.0)) throw ConfigError("simulation horizon must be > 0");
    const double length = solver.domain().length;
    const std::span<const double> switches = source.switching_times();

    std::size_t next_switch = 0;
    auto sample = [&](std::size_t j) {
        source.on_switch(j, st);
        const double e = source.sampled_energy().value_or(hooks.energy(st));
        traj.samples.push_back({j, st.t, st.s, e, source.flux(st.t, st.t)});
    };
    if (!switches.empty() && switches.front() <= 0.0) {
        sample(0);
        next_switch = 1;
    }

    double energy = hooks.energy(st);
    double cumulative = 0.0;
    traj.initial_energy = energy;
    {
        bool valid = true;
        StepMonitor scratch;
        hooks.monitor(scratch, st, st.s, length, valid);
        traj.rows.push_back(hooks.row(st, source.flux(st.t, st.t), energy, cumulative, valid));
    }
    double last_row_t = st.t;
    bool pending_valid = true;
    auto& m = traj.monitor;

    while (st.t < opts.horizon) {
        const double switch_t =
            next_switch < switches.size() ? switches[next_switch] : std::numeric_limits<double>::infinity();
        const double target = std::min(switch_t, opts.horizon);
        bool lands = false;
        const double dt = snap_step(st.t, solver.suggested_dt(st), target, lands);
        const double q = source.flux(st.t, st.t + dt);
        const double prev_s = st.s;
        try {
            solver.advance(st, q, dt);
        } catch (const DomainExhaustedError& e) {
            traj.termination = Termination::domain_exhausted;
            traj.message = e.what();
            m.model_valid = false;
            if (std::isnan(m.first_violation_t)) m.first_violation_t = st.t;
            break;
        } catch (const NumericalError& e) {
            traj.termination = Termination::numerical_error;
            traj.message = e.what();
            break;
        }
        if (lands) st.t = target;
        cumulative += q * dt;

        const double next_energy = hooks.energy(st);
        m.max_energy_residual = std::max(m.max_energy_residual, std::abs(next_energy - energy - dt * q));
        energy = next_energy;

        bool valid = true;
        ++m.steps;
        hooks.monitor(m, st, prev_s, length, valid);
        if (!valid && m.model_valid) {
            m.model_valid = false;
            m.first_violation_t = st.t;
        }
        pending_valid = pending_valid && valid;

        bool force_row = false;
        if (lands && target == switch_t) {
            sample(next_switch);
            ++next_switch;
            force_row = true;
        }
        const bool done = st.t >= opts.horizon;
        if (force_row || done || st.t >= last_row_t + opts.row_stride * (1.0 - 1e-12)) {
            traj.rows.push_back(hooks.row(st, source.flux(st.t, st.t), energy, cumulative, pending_valid));
            last_row_t = st.t;
            pending_valid = true;
        }
    }
    if (traj.rows.back().t != st.t) {
        traj.rows.push_back(hooks.row(st, source.flux(st.t, st.t), energy, cumulative, pending_valid));
    }
    return {std::move(traj), std::move(st)};
}

}  // namespace detail

/**
 * Runs the one-phase problem from `init` to opts.horizon under `source`.
 * Solver errors end the run early; the partial trajectory is returned with
 * its termination status set.
 */
inline SimulationResult<OnePhaseState> simulate(const InitialData& init, const DomainSpec& dom,
                                                const MaterialParams& p, FluxSource<OnePhaseState>& source,
                                                const SimulationOptions& opts) {
    OnePhaseState st = make_one_phase_state(init, dom, p);
    OnePhaseSolver solver(p, detail::with_schedule_cap(dom, source.switching_times()));
    Trajectory traj;
    traj.phase = Phase::one_phase;
    traj.length = dom.length;
    traj.setpoint = opts.reference.setpoint;
    traj.initial_s = init.s0;
    traj.melting_temp = p.melting_temp();
    detail::OnePhaseHooks hooks{p, opts};
    return detail::run(solver, std::move(st), source, opts, hooks, std::move(traj));
}

/// Two-phase counterpart of simulate().
inline SimulationResult<TwoPhaseState> simulate_two_phase(const InitialData& init, const DomainSpec& dom,
                                                          const TwoPhaseParams& p,
                                                          FluxSource<TwoPhaseState>& source,
                                                          const SimulationOptions& opts) {
    TwoPhaseState st = make_two_phase_state(init, dom, p);
    TwoPhaseSolver solver(p, detail::with_schedule_cap(dom, source.switching_times()));
    Trajectory traj;
    traj.phase = Phase::two_phase;
    traj.length = dom.length;
    traj.setpoint = opts.reference.setpoint;
    traj.initial_s = init.s0;
    traj.melting_temp = p.melting_temp();
    detail::TwoPhaseHooks hooks{p, opts};
    return detail::run(solver, std::move(st), source, opts, hooks, std::move(traj));
}

}  // namespace stefan
