#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stefan/control.hpp"
#include "stefan/domain.hpp"
#include "stefan/error.hpp"
#include "stefan/material.hpp"
#include "stefan/numerics.hpp"
#include "stefan/trajectory.hpp"

namespace stefan {

// ---------------------------------------------------------------------------
// Norms

/// int_0^s u^2 dx + (s - s_r)^2
inline double psi_norm(const OnePhaseState& st, const ControllerConfig& cfg) {
    const double X = st.s - cfg.setpoint;
    return numerics::trapezoid_squared(st.u, st.dx()) + X * X;
}

/// int_0^s u^2 dx + int_s^L v^2 dx + (s - s_r)^2
inline double psi_norm(const TwoPhaseState& st, const ControllerConfig& cfg) {
    const double X = st.s - cfg.setpoint;
    return numerics::trapezoid_squared(st.u, st.liquid_dx()) + numerics::trapezoid_squared(st.v, st.solid_dx()) +
           X * X;
}

/// Solid-phase L2 energy int_s^L (T_s - Tm)^2 dx.
inline double solid_norm(const TwoPhaseState& st) { return numerics::trapezoid_squared(st.v, st.solid_dx()); }

// ---------------------------------------------------------------------------
// Backstepping transform

/**
 * Kernels of the Volterra transform (u, X) -> (w, X) and its inverse.
 *
 * Forward kernel phi(z) = (c/beta) z - eps; inverse kernel
 * psi(z) = e^{lambda z} (p sin(omega z) + eps cos(omega z)). Both are well
 * defined for 0 < eps < 2 sqrt(alpha c)/beta, where omega is real.
 */
class BacksteppingConfig {
public:
    /// Largest admissible eps (exclusive).
    static double eps_cap(double alpha, double beta, double gain) { return 2.0 * std::sqrt(alpha * gain) / beta; }

    static BacksteppingConfig make(double alpha, double beta, double gain, std::optional<double> eps = {}) {
        if (!(alpha > 0.0 && beta > 0.0 && gain > 0.0)) {
            throw ConfigError("backstepping transform needs alpha, beta, c > 0");
        }
        const double cap = eps_cap(alpha, beta, gain);
        const double e = eps.value_or(0.5 * cap);
        if (!(e > 0.0 && e < cap)) {
            throw ConfigError("backstepping eps out of range: need 0 < eps < " + to_text(cap));
        }
        BacksteppingConfig cfg;
        cfg.alpha_ = alpha;
        cfg.beta_ = beta;
        cfg.gain_ = gain;
        cfg.eps_ = e;
        const double eb = e * beta;
        cfg.lambda_ = eb / (2.0 * alpha);
        cfg.omega_ = std::sqrt((4.0 * alpha * gain - eb * eb) / (4.0 * alpha * alpha));
        cfg.p_ = -(2.0 * alpha * gain - eb * eb) / (2.0 * alpha * beta * cfg.omega_);
        return cfg;
    }

    static BacksteppingConfig make(const MaterialParams& m, double gain, std::optional<double> eps = {}) {
        return make(m.alpha(), m.beta(), gain, eps);
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double gain() const { return gain_; }
    double eps() const { return eps_; }
    double lambda() const { return lambda_; }
    double omega() const { return omega_; }
    double p() const { return p_; }

    double phi(double z) const { return gain_ / beta_ * z - eps_; }
    double psi(double z) const { return std::exp(lambda_ * z) * (p_ * std::sin(omega_ * z) + eps_ * std::cos(omega_ * z)); }

private:
    BacksteppingConfig() = default;
    double alpha_{}, beta_{}, gain_{}, eps_{}, lambda_{}, omega_{}, p_{};
};

namespace detail {
// out_i = in_i - (beta/alpha) int_{x_i}^{s} K(x_i - y) in(y) dy - K(x_i - s) X
template <class Kernel>
std::vector<double> volterra_map(std::span<const double> in, double s, double X, double ratio, Kernel kernel) {
    const std::size_t n = in.size() - 1;
    const double h = s / static_cast<double>(n);
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i <= n; ++i) {
        const double xi = h * static_cast<double>(i);
        double integral = 0.0;
        if (i < n) {
            integral = 0.5 * (kernel(0.0) * in[i] + kernel(xi - s) * in[n]);
            for (std::size_t j = i + 1; j < n; ++j) {
                integral += kernel(xi - h * static_cast<double>(j)) * in[j];
            }
            integral *= h;
        }
        out[i] = in[i] - ratio * integral - kernel(xi - s) * X;
    }
    return out;
}
}  // namespace detail

/// w = u - (beta/alpha) int_x^s phi(x - y) u(y) dy - phi(x - s) X on the uniform grid of [0, s].
inline std::vector<double> backstepping_forward(std::span<const double> u, double s, double X,
                                                const BacksteppingConfig& cfg) {
    return detail::volterra_map(u, s, X, cfg.beta() / cfg.alpha(), [&](double z) { return cfg.phi(z); });
}

/// u = w - (beta/alpha) int_x^s psi(x - y) w(y) dy - psi(x - s) X.
inline std::vector<double> backstepping_inverse(std::span<const double> w, double s, double X,
                                                const BacksteppingConfig& cfg) {
    return detail::volterra_map(w, s, X, cfg.beta() / cfg.alpha(), [&](double z) { return cfg.psi(z); });
}

/// V = ||w||^2/(2 alpha) + (eps/(2 beta)) X^2.
inline double lyapunov_V(std::span<const double> w, double s, double X, const BacksteppingConfig& cfg) {
    const double h = s / static_cast<double>(w.size() - 1);
    return numerics::trapezoid_squared(w, h) / (2.0 * cfg.alpha()) + cfg.eps() / (2.0 * cfg.beta()) * X * X;
}

/// V evaluated on the transformed one-phase state.
inline double lyapunov_V(const OnePhaseState& st, const ControllerConfig& ctrl, const BacksteppingConfig& cfg) {
    const double X = st.s - ctrl.setpoint;
    const auto w = backstepping_forward(st.u, st.s, X, cfg);
    return lyapunov_V(w, st.s, X, cfg);
}

// ---------------------------------------------------------------------------
// Energy conservation

struct EnergyResidualReport {
    std::vector<double> residual;  ///< E_{k+1} - E_k - (t_{k+1} - t_k) q_k per row pair
    double max_abs{0.0};
    double max_rel{0.0};  ///< max_abs / max(|E_0|, floor)
    double tolerance{1e-3};
    bool pass{true};
};

/**
 * Discrete check of dE/dt = q between consecutive rows. Rows must include
 * every switching instant so that q is constant between neighbours.
 */
inline EnergyResidualReport energy_conservation_residual(std::span<const TrajectoryRow> rows,
                                                         double tolerance = 1e-3) {
    EnergyResidualReport rep;
    rep.tolerance = tolerance;
    if (rows.size() < 2) return rep;
    const double scale = std::max(std::abs(rows.front().energy), kEpsFloor);
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        const double r = rows[k + 1].energy - rows[k].energy - (rows[k + 1].t - rows[k].t) * rows[k].q;
        rep.residual.push_back(r);
        rep.max_abs = std::max(rep.max_abs, std::abs(r));
    }
    rep.max_rel = rep.max_abs / scale;
    rep.pass = std::isfinite(rep.max_rel) && rep.max_rel <= tolerance;
    return rep;
}

/// Observed convergence order from errors at spacing h and h/ratio.
inline double observed_order(double coarse_error, double fine_error, double ratio = 2.0) {
    return std::log(coarse_error / fine_error) / std::log(ratio);
}

/// Max over sampling instants of |E_{j+1} - (1 - c tau_j) E_j| / |E_0|.
inline double energy_recursion_error(std::span<const SampleRecord> samples, double gain) {
    if (samples.size() < 2) return 0.0;
    const double scale = std::max(std::abs(samples.front().energy), kEpsFloor);
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < samples.size(); ++j) {
        const double tau = samples[j + 1].t - samples[j].t;
        const double r = samples[j + 1].energy - (1.0 - gain * tau) * samples[j].energy;
        worst = std::max(worst, std::abs(r));
    }
    return worst / scale;
}

// ---------------------------------------------------------------------------
// Exponential decay

/// Relative floor below which Psi is treated as converged to round-off.
inline constexpr double kPsiFloor = 1e-20;

struct DecayReport {
    bool trivially_converged{false};
    double theoretical_rate{};  ///< b [1/s]
    double fitted_rate{};       ///< -slope of log Psi over the tail window [1/s]
    double envelope_constant{}; ///< M = max Psi(t) e^{bt} / Psi(0)
    double slope_margin{0.1};   ///< pass iff slope <= -(1 - margin) b
    std::size_t tail_points{0};
    double tail_start{kNaN};
    double tail_end{kNaN};
    std::vector<double> envelope_ratio;  ///< Psi(t) e^{bt} / Psi(0) per row
    bool pass{false};
    std::string message;
};

/**
 * Fits Psi(t) <= M Psi(0) e^{-bt}.
 *
 * The tail window is the later half of the rows that lie after
 * `transient_end` (the first sampling instant) and above kPsiFloor*Psi(0).
 */
inline DecayReport decay_fit(std::span<const TrajectoryRow> rows, double rate_bound, double transient_end,
                             double slope_margin = 0.1) {
    DecayReport rep;
    rep.theoretical_rate = rate_bound;
    rep.slope_margin = slope_margin;
    if (rows.empty()) {
        rep.message = "empty trajectory";
        return rep;
    }
    const double psi0 = rows.front().psi;
    if (!(psi0 > 0.0)) {
        rep.trivially_converged = true;
        rep.pass = true;
        rep.envelope_constant = 1.0;
        rep.message = "Psi(0) = 0: trivially converged";
        return rep;
    }
    double M = 0.0;
    for (const auto& r : rows) {
        const double ratio = r.psi * std::exp(rate_bound * (r.t - rows.front().t)) / psi0;
        rep.envelope_ratio.push_back(ratio);
        M = std::max(M, ratio);
    }
    rep.envelope_constant = M;

    std::vector<std::size_t> eligible;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].t >= transient_end && rows[k].psi > kPsiFloor * psi0) eligible.push_back(k);
    }
    const std::size_t first = eligible.size() / 2;
    const std::size_t count = eligible.size() - first;
    rep.tail_points = count;
    if (count < 3) {
        rep.message = "tail window has fewer than 3 usable samples";
        return rep;
    }
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = first; k < eligible.size(); ++k) {
        const auto& r = rows[eligible[k]];
        const double y = std::log(r.psi);
        st += r.t;
        sy += y;
        stt += r.t * r.t;
        sty += r.t * y;
    }
    const double n = static_cast<double>(count);
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    rep.fitted_rate = -slope;
    rep.tail_start = rows[eligible[first]].t;
    rep.tail_end = rows[eligible.back()].t;
    rep.pass = std::isfinite(M) && slope <= -(1.0 - slope_margin) * rate_bound;
    rep.message = rep.pass ? "tail decay at least the theoretical rate" : "tail decays slower than the theoretical rate";
    return rep;
}

// ---------------------------------------------------------------------------
// Validity reports

struct Check {
    std::string name;
    bool passed{true};
    std::string detail;
};

struct ValidityReport {
    std::vector<Check> checks;
    std::vector<bool> row_flags;

    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    const Check* find(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

/// Tolerances of the one-phase report.
struct OnePhaseValidityTolerances {
    double temperature{kTolValid};   ///< liquid undershoot below Tm [degC]
    double monotone{1e-9};           ///< allowed decrease of s per step/row [m]
    double overshoot{1e-5};          ///< allowed excess of s over s_r [m]
    double boundary{1e-6};           ///< allowed T(0) undershoot below Tm [degC]
};

/**
 * Model validity (liquid not subcooled, 0 < s < L) and the closed-loop
 * properties (sdot >= 0, s0 <= s <= s_r). Uses the step monitor when the
 * trajectory carries one; otherwise falls back to the rows.
 */
inline ValidityReport validity_report_one_phase(const Trajectory& traj, bool check_setpoint_bound = true,
                                                const OnePhaseValidityTolerances& tol = {}) {
    ValidityReport rep;
    const auto& m = traj.monitor;
    const bool have_steps = m.steps > 0;

    bool rows_valid = true;
    double max_row_drop = 0.0, min_row_s = std::numeric_limits<double>::infinity(), max_row_s = -min_row_s;
    double min_boundary = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.rows.size(); ++k) {
        const auto& r = traj.rows[k];
        rep.row_flags.push_back(r.valid);
        rows_valid = rows_valid && r.valid;
        if (k > 0) max_row_drop = std::max(max_row_drop, traj.rows[k - 1].s - r.s);
        min_row_s = std::min(min_row_s, r.s);
        max_row_s = std::max(max_row_s, r.s);
        min_boundary = std::min(min_boundary, r.boundary_temp);
    }

    {
        Check c{"liquid_above_melting", true, {}};
        c.passed = rows_valid && (!have_steps || m.min_liquid >= -tol.temperature);
        c.detail = have_steps ? "min(T - Tm) = " + to_text(m.min_liquid) : "row flags";
        rep.checks.push_back(c);
    }
    {
        Check c{"interface_in_domain", true, {}};
        const double lo = have_steps ? m.min_s : min_row_s;
        const double hi = have_steps ? m.max_s : max_row_s;
        c.passed = lo > 0.0 && hi < traj.length && traj.termination != Termination::domain_exhausted;
        c.detail = "s in [" + to_text(lo) + ", " + to_text(hi) + "]";
        rep.checks.push_back(c);
    }
    {
        Check c{"interface_monotone", true, {}};
        const double drop = std::max(max_row_drop, have_steps ? m.max_s_decrease : 0.0);
        c.passed = drop <= tol.monotone;
        c.detail = "largest decrease of s = " + to_text(drop) + " m";
        rep.checks.push_back(c);
    }
    if (check_setpoint_bound) {
        Check c{"interface_below_setpoint", true, {}};
        const double hi = have_steps ? std::max(m.max_s, max_row_s) : max_row_s;
        c.passed = hi <= traj.setpoint + tol.overshoot;
        c.detail = "max s - s_r = " + to_text(hi - traj.setpoint) + " m";
        rep.checks.push_back(c);
    }
    {
        Check c{"boundary_above_melting", true, {}};
        double lowest = min_boundary - traj.melting_temp;
        if (have_steps) lowest = std::min(lowest, m.min_boundary_offset);
        c.passed = lowest >= -tol.boundary;
        c.detail = "min T(0) - Tm = " + to_text(lowest);
        rep.checks.push_back(c);
    }
    return rep;
}

/**
 * Two-phase validity: liquid >= Tm, solid <= Tm, 0 < s < L, the cumulative
 * input condition 0 < gamma s_inf + int q < gamma L, and non-positive
 * interface gradients on both sides.
 */
inline ValidityReport validity_monitor_two_phase(const Trajectory& traj, double s_inf, double gamma,
                                                 double gradient_tol = 1e-6) {
    ValidityReport rep;
    const auto& m = traj.monitor;
    bool rows_valid = true;
    double lowest = std::numeric_limits<double>::infinity(), highest = -lowest;
    for (const auto& r : traj.rows) {
        rep.row_flags.push_back(r.valid);
        rows_valid = rows_valid && r.valid;
        const double budget = gamma * s_inf + r.cumulative_input;
        lowest = std::min(lowest, budget);
        highest = std::max(highest, budget);
    }
    const bool have_steps = m.steps > 0;
    rep.checks.push_back({"liquid_above_melting", rows_valid && (!have_steps || m.min_liquid >= -kTolValid),
                          "min(T_l - Tm) = " + to_text(m.min_liquid)});
    rep.checks.push_back({"solid_below_melting", rows_valid && (!have_steps || m.max_solid <= kTolValid),
                          "max(T_s - Tm) = " + to_text(m.max_solid)});
    rep.checks.push_back({"interface_in_domain",
                          traj.termination != Termination::domain_exhausted &&
                              (!have_steps || (m.min_s > 0.0 && m.max_s < traj.length)),
                          "s in [" + to_text(m.min_s) + ", " + to_text(m.max_s) + "]"});
    rep.checks.push_back({"cumulative_input_budget", lowest > 0.0 && highest < gamma * traj.length,
                          "gamma s_inf + int q in [" + to_text(lowest) + ", " + to_text(highest) +
                              "], gamma L = " + to_text(gamma * traj.length)});
    rep.checks.push_back({"liquid_interface_gradient_nonpositive",
                          !have_steps || m.max_liquid_gradient <= gradient_tol,
                          "max T_l,x(s) = " + to_text(m.max_liquid_gradient)});
    rep.checks.push_back({"solid_interface_gradient_nonpositive", !have_steps || m.max_solid_gradient <= gradient_tol,
                          "max T_s,x(s) = " + to_text(m.max_solid_gradient)});
    return rep;
}

/// Index of the first row where gamma s_inf + int q leaves (0, gamma L), if any.
inline std::optional<std::size_t> first_budget_violation(const Trajectory& traj, double s_inf, double gamma) {
    for (std::size_t k = 0; k < traj.rows.size(); ++k) {
        const double budget = gamma * s_inf + traj.rows[k].cumulative_input;
        if (!(budget > 0.0 && budget < gamma * traj.length)) return k;
    }
    return std::nullopt;
}

struct SolidDecayReport {
    double rate{};           ///< alpha_s / (2 L^2)
    double worst_ratio{0.0}; ///< max V2(t) / (V2(0) e^{-rate t})
    double tolerance{0.05};
    bool pass{true};
};

/// Checks V2(t) <= V2(0) e^{-alpha_s t/(2L^2)} (1 + tol) on every row.
inline SolidDecayReport solid_decay_check(std::span<const TrajectoryRow> rows, double alpha_s, double length,
                                          double tolerance = 0.05) {
    SolidDecayReport rep;
    rep.rate = alpha_s / (2.0 * length * length);
    rep.tolerance = tolerance;
    if (rows.empty()) return rep;
    const double v0 = rows.front().solid_norm;
    if (!(v0 > 0.0)) {
        for (const auto& r : rows) rep.pass = rep.pass && !(r.solid_norm > 0.0);
        return rep;
    }
    for (const auto& r : rows) {
        const double bound = v0 * std::exp(-rep.rate * (r.t - rows.front().t));
        rep.worst_ratio = std::max(rep.worst_ratio, r.solid_norm / bound);
    }
    rep.pass = rep.worst_ratio <= 1.0 + tolerance;
    return rep;
}

}  // namespace stefan
