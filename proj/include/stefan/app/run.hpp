#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stefan/control.hpp"
#include "stefan/diagnostics.hpp"
#include "stefan/error.hpp"
#include "stefan/io/config.hpp"
#include "stefan/schedule.hpp"
#include "stefan/simulate.hpp"
#include "stefan/trajectory.hpp"

namespace stefan::app {

/// A run that was refused before stepping because a hypothesis failed.
class HypothesisError : public ConfigError {
public:
    explicit HypothesisError(Violations v) : ConfigError(join_messages(v)), violations_(std::move(v)) {}
    const Violations& violations() const { return violations_; }

private:
    Violations violations_;
};

/// Everything a finished (or aborted) run produces.
struct RunReport {
    io::RunConfig config;
    Schedule schedule;
    Trajectory trajectory;
    std::vector<double> open_loop;  ///< q0 prod(1 - c tau_i) from the discrete E0
    double decay_bound{kNaN};
    double s_inf{kNaN};
    double recursion_error{kNaN};
    EnergyResidualReport energy;
    DecayReport decay;
    ValidityReport validity;
    std::optional<SolidDecayReport> solid_decay;

    bool valid() const { return trajectory.completed() && validity.pass(); }
    /// 0 when the run completed and every validity check held, 1 otherwise.
    int exit_code() const { return valid() ? 0 : 1; }
};

namespace detail {

template <class State>
std::unique_ptr<FluxSource<State>> make_source(const io::RunConfig& cfg, const Schedule& sched, double e0,
                                               const auto& params) {
    using Params = std::decay_t<decltype(params)>;
    switch (cfg.mode) {
        case io::InputMode::closed_loop:
            return std::make_unique<ZohController<State, Params>>(params, cfg.controller, sched);
        case io::InputMode::open_loop:
            return std::make_unique<PiecewiseConstantInput<State>>(sched,
                                                                   open_loop_sequence(e0, cfg.controller.gain, sched));
        case io::InputMode::zero_input:
            return std::make_unique<PiecewiseConstantInput<State>>(sched, std::vector<double>(sched.size(), 0.0));
    }
    throw ConfigError("unknown input mode");
}

inline double first_gap(const Schedule& sched) { return sched.size() > 1 ? sched.instants[1] : 0.0; }

}  // namespace detail

/**
 * Validates and runs one configuration. Throws HypothesisError (or another
 * ConfigError) before stepping when the configuration is inadmissible.
 */
inline RunReport execute(const io::RunConfig& cfg) {
    RunReport rep;
    rep.config = cfg;
    try {
        rep.schedule = make_schedule(cfg.schedule, cfg.horizon);
    } catch (const ScheduleError& e) {
        throw ConfigError(e.what());
    }
    if (auto v = io::validate_run(cfg, rep.schedule); !v.empty()) throw HypothesisError(std::move(v));

    SimulationOptions opts;
    opts.horizon = cfg.horizon;
    opts.row_stride = cfg.row_stride();
    opts.reference = cfg.controller;

    if (cfg.two_phase()) {
        const TwoPhaseParams params = cfg.two_phase_params();
        const double e0 = internal_energy(make_two_phase_state(cfg.initial, cfg.domain, params), params, cfg.controller);
        if (cfg.controller.gain * rep.schedule.upper_diameter < 1.0) {
            rep.open_loop = open_loop_sequence(e0, cfg.controller.gain, rep.schedule);
        }
        auto source = detail::make_source<TwoPhaseState>(cfg, rep.schedule, e0, params);
        auto result = simulate_two_phase(cfg.initial, cfg.domain, params, *source, opts);
        rep.trajectory = std::move(result.trajectory);
        rep.s_inf = s_infinity(cfg.initial, cfg.domain, params);
        rep.decay_bound = decay_rate_bound(cfg.controller, params, cfg.domain);
        rep.validity = validity_monitor_two_phase(rep.trajectory, rep.s_inf, params.gamma());
        rep.solid_decay = solid_decay_check(rep.trajectory.rows, params.solid().alpha(), cfg.domain.length);
    } else {
        const MaterialParams& params = cfg.material;
        const double e0 = internal_energy(make_one_phase_state(cfg.initial, cfg.domain, params), params, cfg.controller);
        if (cfg.controller.gain * rep.schedule.upper_diameter < 1.0) {
            rep.open_loop = open_loop_sequence(e0, cfg.controller.gain, rep.schedule);
        }
        if (cfg.controller.gain > 0.0) opts.lyapunov = BacksteppingConfig::make(params, cfg.controller.gain, cfg.epsilon);
        auto source = detail::make_source<OnePhaseState>(cfg, rep.schedule, e0, params);
        auto result = simulate(cfg.initial, cfg.domain, params, *source, opts);
        rep.trajectory = std::move(result.trajectory);
        rep.decay_bound = decay_rate_bound(cfg.controller, params);
        rep.validity = validity_report_one_phase(rep.trajectory, cfg.mode != io::InputMode::zero_input);
    }
    rep.energy = energy_conservation_residual(rep.trajectory.rows);
    if (cfg.mode == io::InputMode::closed_loop) {
        rep.recursion_error = energy_recursion_error(rep.trajectory.samples, cfg.controller.gain);
    }
    rep.decay = decay_fit(rep.trajectory.rows, rep.decay_bound, detail::first_gap(rep.schedule));
    return rep;
}

// ---------------------------------------------------------------------------
// JSON summary

inline nlohmann::json to_json(const ValidityReport& v) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : v.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return {{"pass", v.pass()}, {"checks", checks}};
}

inline nlohmann::json to_json(const DecayReport& d) {
    return {{"b", d.theoretical_rate},
            {"b_fit", d.fitted_rate},
            {"M", d.envelope_constant},
            {"slope_margin", d.slope_margin},
            {"tail_start", d.tail_start},
            {"tail_end", d.tail_end},
            {"tail_points", d.tail_points},
            {"trivially_converged", d.trivially_converged},
            {"pass", d.pass},
            {"message", d.message}};
}

/// Summary document written next to the trajectory file.
inline nlohmann::json summary_json(const RunReport& rep) {
    const auto& tr = rep.trajectory;
    const auto& last = tr.rows.back();
    nlohmann::json j;
    j["schema"] = "stefan-summary/1";
    j["phase"] = rep.config.two_phase() ? "two_phase" : "one_phase";
    j["mode"] = io::to_string(rep.config.mode);
    j["termination"] = to_string(tr.termination);
    j["message"] = tr.message;
    j["exit_code"] = rep.exit_code();
    j["iterations"] = tr.monitor.steps;
    j["final"] = {{"t", last.t}, {"s", last.s}, {"sdot", last.sdot}, {"setpoint_error", last.s - tr.setpoint}};
    j["energy"] = {{"initial", tr.initial_energy},
                   {"max_step_residual", tr.monitor.max_energy_residual},
                   {"max_row_residual_rel", rep.energy.max_rel},
                   {"row_residual_pass", rep.energy.pass},
                   {"recursion_error_rel", rep.recursion_error}};
    j["decay"] = to_json(rep.decay);
    j["validity"] = to_json(rep.validity);
    j["validity"]["first_violation_t"] = tr.monitor.first_violation_t;
    if (rep.config.two_phase()) {
        j["s_inf"] = rep.s_inf;
        if (rep.solid_decay) {
            j["solid_decay"] = {{"rate", rep.solid_decay->rate},
                                {"worst_ratio", rep.solid_decay->worst_ratio},
                                {"tolerance", rep.solid_decay->tolerance},
                                {"pass", rep.solid_decay->pass}};
        }
    }
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : tr.samples) {
        samples.push_back({{"j", s.index}, {"t", s.t}, {"s", s.s}, {"E_tilde", s.energy}, {"q_c", s.q}});
    }
    j["samples"] = samples;
    j["open_loop_q"] = rep.open_loop;
    j["config"] = io::to_json(rep.config);
    return j;
}

}  // namespace stefan::app
