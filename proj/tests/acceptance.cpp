// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "stefan/app/commands.hpp"
#include "stefan/app/oracle.hpp"
#include "stefan/app/run.hpp"
#include "stefan/diagnostics.hpp"
#include "stefan/io/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace stefan;
namespace fs = std::filesystem;

namespace {

int failures = 0;

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void report(int k, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", k, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void guarded(int k, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(k, false, std::string("exception: ") + e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path config_path(const char* name) { return fs::path(STEFAN_SOURCE_DIR) / "configs" / name; }

/// max_j |E_{j+1} - (1 - c tau_j) E_j| in J/m^2
double recursion_residual(const std::vector<SampleRecord>& s, double c) {
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
        const double tau = s[j + 1].t - s[j].t;
        worst = std::max(worst, std::abs(s[j + 1].energy - (1.0 - c * tau) * s[j].energy));
    }
    return worst;
}

double short_horizon_recursion(io::RunConfig cfg, std::size_t n, double horizon) {
    cfg.domain.grid_points = n;
    cfg.horizon = horizon;
    cfg.output.stride = horizon / 100.0;
    const auto rep = app::execute(cfg);
    if (!rep.trajectory.completed()) throw NumericalError("ladder run aborted: " + rep.trajectory.message);
    return rep.recursion_error;
}

void criterion_1(const app::RunReport& rep, double runtime) {
    const auto& tr = rep.trajectory;
    const auto& m = tr.monitor;
    const double c = rep.config.controller.gain;
    const double sr = rep.config.controller.setpoint;
    const double s_end = tr.rows.back().s;

    const bool monotone = m.max_s_decrease <= 1e-9;
    const bool bounded = m.max_s <= sr + 1e-5;
    const bool reached = std::abs(s_end - sr) <= 0.01 * sr;

    const auto& smp = tr.samples;
    const double tol_q = c * recursion_residual(smp, c);
    bool q_sign = true, q_order = true;
    std::size_t raw_negative = 0;
    for (std::size_t j = 0; j < smp.size(); ++j) {
        if (smp[j].q < 0.0) ++raw_negative;
        q_sign = q_sign && smp[j].q >= -tol_q;
        if (j + 1 < smp.size()) q_order = q_order && smp[j + 1].q <= smp[j].q + tol_q;
    }

    const auto& inst = rep.schedule.instants;
    bool held = true;
    for (std::size_t k = 1; k < tr.rows.size(); ++k) {
        if (tr.rows[k].q != tr.rows[k - 1].q && !std::binary_search(inst.begin(), inst.end(), tr.rows[k].t)) {
            held = false;
        }
    }
    const bool boundary = m.min_boundary_offset >= -1e-6;
    const bool fast = runtime < 30.0;

    report(1, tr.completed() && monotone && bounded && reached && q_sign && q_order && held && boundary && fast,
           fmt("max step decrease of s %.3g m (tol 1e-9), max s - s_r %.3g m (tol 1e-5), |s_end - s_r|/s_r %.3g "
               "(tol 0.01), q_j >= -%.3g W/m2 %s, nonincreasing %s (raw q_j < 0: %zu of %zu), held between samples "
               "%s, min T(0) - Tm %.3g degC, %zu steps in %.1f s (limit 30 s)",
               m.max_s_decrease, m.max_s - sr, std::abs(s_end - sr) / sr, tol_q, q_sign ? "yes" : "no",
               q_order ? "yes" : "no", raw_negative, smp.size(), held ? "yes" : "no", m.min_boundary_offset, m.steps,
               runtime));
}

void criterion_2(const app::RunReport& rep, double coarse, double mid, double fine) {
    const double full = rep.recursion_error;
    const double ratio = coarse / fine;
    report(2, full <= 1e-3 && ratio >= 3.0,
           fmt("N = 200 over %.0f s: %.3e (tol 1e-3); first hour N = 100/200/400: %.3e / %.3e / %.3e, "
               "reduction N = 100 -> 400 %.1fx (required >= 3)",
               rep.config.horizon, full, coarse, mid, fine, ratio));
}

void criterion_3(const app::RunReport& closed, const app::RunReport& open) {
    const auto& smp = closed.trajectory.samples;
    const auto& qol = closed.open_loop;
    const std::size_t n = std::min(smp.size(), qol.size());
    double worst = 0.0, scale = 0.0, worst_elem = 0.0;
    std::size_t last_ok = 0;
    bool prefix = true;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = std::abs(smp[j].q - qol[j]);
        worst = std::max(worst, d);
        scale = std::max(scale, std::abs(qol[j]));
        const double rel = d / std::abs(qol[j]);
        worst_elem = std::max(worst_elem, rel);
        prefix = prefix && rel <= 1e-3;
        if (prefix) last_ok = j;
    }
    const double seq = worst / scale;

    const auto& a = closed.trajectory.rows;
    const auto& b = open.trajectory.rows;
    // dt follows s, so the two time grids drift apart by round-off; compare s at equal t to first order
    bool aligned = a.size() == b.size() && open.trajectory.completed();
    double s_rel = 0.0, t_off = 0.0;
    for (std::size_t k = 0; aligned && k < a.size(); ++k) {
        const double dt = a[k].t - b[k].t;
        t_off = std::max(t_off, std::abs(dt));
        s_rel = std::max(s_rel, std::abs(a[k].s - (b[k].s + b[k].sdot * dt)) / std::abs(b[k].s));
    }
    // far below the smallest solver step (s0 dxi)^2 / alpha
    const auto& cfg = closed.config;
    const double h0 = cfg.initial.s0 / static_cast<double>(cfg.domain.grid_points);
    aligned = aligned && t_off <= 1e-6 * h0 * h0 / cfg.material.alpha();
    report(3, n > 1 && seq <= 1e-3 && aligned && s_rel <= 1e-6,
           fmt("max_j |q_j - q_ol_j| / max_j |q_ol_j| = %.3e (tol 1e-3) over %zu samples; element-wise max %.3e, "
               "<= 1e-3 up to j = %zu; closed vs open-loop s(t) max rel. difference %.3e (tol 1e-6) on %zu rows "
               "(row times differ by at most %.1e s)",
               seq, n, worst_elem, last_ok, s_rel, a.size(), t_off));
}

void criterion_4(const app::RunReport& rep) {
    const auto& d = rep.decay;
    const bool finite = std::isfinite(d.envelope_constant);
    report(4, d.pass && finite && d.fitted_rate >= 0.9 * d.theoretical_rate,
           fmt("tail log-Psi slope -%.4e 1/s vs -(1 - 0.1) b = -%.4e 1/s (b = %.4e 1/s), fit over t in [%.0f, %.0f] s, "
               "M = %.4g",
               d.fitted_rate, 0.9 * d.theoretical_rate, d.theoretical_rate, d.tail_start, d.tail_end,
               d.envelope_constant));
}

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto table = app::oracle_convergence({100, 200, 400});
    const double runtime = seconds_since(t0);
    const double e200 = table.levels[1].max_rel_error;
    const bool orders = std::all_of(table.orders.begin(), table.orders.end(), [](double p) { return p >= 1.8; });
    report(5, e200 <= 0.01 && orders && table.monotone && runtime < 60.0,
           fmt("max rel. interface error N = 100/200/400: %.3e / %.3e / %.3e (N = 200 tol 0.01), observed order "
               "%.3f / %.3f (required >= 1.8), %.1f s (limit 60 s)",
               table.levels[0].max_rel_error, e200, table.levels[2].max_rel_error, table.orders[0], table.orders[1],
               runtime));
}

void criterion_6(const io::RunConfig& cfg) {
    const auto b = BacksteppingConfig::make(cfg.material, cfg.controller.gain, cfg.epsilon);
    const std::size_t n = 400;
    // states the controlled system visits: s0 <= s <= s_r, X = s - s_r
    const double sr = cfg.controller.setpoint;
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> sdist(cfg.initial.s0, sr), amp(-2.0, 2.0), freq(1.0, 6.0);
    double worst_trip = 0.0, worst_identity = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double s = sdist(rng), X = s - sr;
        const double a0 = amp(rng), a1 = amp(rng), a2 = amp(rng), w = freq(rng);
        std::vector<double> u(n + 1);
        double scale = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(n);
            u[i] = (1.0 - x) * (a0 + a1 * x * x + a2 * std::sin(w * x));
            scale = std::max(scale, std::abs(u[i]));
        }
        const auto fw = backstepping_forward(u, s, X, b);
        const auto back = backstepping_inverse(fw, s, X, b);
        double e = 0.0;
        for (std::size_t i = 0; i <= n; ++i) e = std::max(e, std::abs(back[i] - u[i]));
        worst_trip = std::max(worst_trip, e / scale);
        worst_identity = std::max(worst_identity, std::abs(fw.back() - b.eps() * X) / std::max(std::abs(X), 1.0));
    }
    report(6, worst_trip <= 1e-4 && worst_identity <= 1e-6,
           fmt("20 random states with s in [%.3g, %.3g] m at N = 400: max ||B^-1(B(u, X)) - u||_inf / ||u||_inf = %.3e (tol 1e-4), "
               "max |w(s) - eps X| / max(|X|, 1) = %.3e (tol 1e-6)",
               cfg.initial.s0, sr, worst_trip, worst_identity));
}

void criterion_7() {
    const auto cfg = io::load_config(config_path("two_phase_demo.json"));
    const auto rep = app::execute(cfg);
    std::string failed;
    for (const auto& c : rep.validity.checks) {
        if (!c.passed) failed += " " + c.name;
    }
    const bool budget = rep.validity.find("cumulative_input_budget") != nullptr;
    const double v2 = rep.solid_decay ? rep.solid_decay->worst_ratio : kNaN;

    auto zero = cfg;
    zero.mode = io::InputMode::zero_input;
    const auto z = app::execute(zero);
    const double s_end = z.trajectory.rows.back().s;
    const double dev = std::abs(s_end - z.s_inf) / z.s_inf;

    report(7, rep.valid() && budget && v2 <= 1.05 && z.trajectory.completed() && dev <= 0.01,
           fmt("closed loop %s, %zu validity checks %s; max V2(t) / (V2(0) e^{-alpha_s t/(2L^2)}) = %.4f (limit 1.05); "
               "zero input s_end = %.6g m vs s_inf = %.6g m, rel. %.3e (tol 0.01)",
               to_string(rep.trajectory.termination), rep.validity.checks.size(),
               failed.empty() ? "hold" : ("fail:" + failed).c_str(), v2, s_end, z.s_inf, dev));
}

void criterion_8() {
    const fs::path out = fs::temp_directory_path() / ("stefan_acceptance_" + std::to_string(::getpid()));
    std::ostringstream gain_out, setpoint_out;
    const int gain_code = app::cmd_simulate(config_path("reject_gain.json"), out / "gain", {}, gain_out);
    const int setpoint_code = app::cmd_simulate(config_path("reject_setpoint.json"), out / "setpoint", {}, setpoint_out);
    fs::remove_all(out);
    const bool gain_msg = gain_out.str().find("gain/sampling condition violated") != std::string::npos;
    const bool setpoint_msg = setpoint_out.str().find("setpoint condition violated") != std::string::npos &&
                              setpoint_out.str().find("unreachable without freezing") != std::string::npos;
    report(8, gain_code == 2 && setpoint_code == 2 && gain_msg && setpoint_msg,
           fmt("cR >= 1 config: exit %d, %s; setpoint below bound: exit %d, %s", gain_code,
               gain_msg ? "gain/sampling condition cited" : "wrong message", setpoint_code,
               setpoint_msg ? "setpoint condition cited" : "wrong message"));
}

}  // namespace

int main() {
    io::RunConfig base;
    app::RunReport closed;
    double runtime = 0.0;
    bool have_closed = false;
    guarded(1, [&] {
        base = io::load_config(config_path("paraffin_default.json"));
        const auto t0 = std::chrono::steady_clock::now();
        closed = app::execute(base);
        runtime = seconds_since(t0);
        have_closed = true;
        criterion_1(closed, runtime);
    });

    if (have_closed) {
        auto open_cfg = base;
        open_cfg.mode = io::InputMode::open_loop;
        auto open = std::async(std::launch::async, [open_cfg] { return app::execute(open_cfg); });
        guarded(2, [&] {
            const double coarse = short_horizon_recursion(base, 100, 3600.0);
            const double mid = short_horizon_recursion(base, 200, 3600.0);
            const double fine = short_horizon_recursion(base, 400, 3600.0);
            criterion_2(closed, coarse, mid, fine);
        });
        guarded(3, [&] { criterion_3(closed, open.get()); });
        guarded(4, [&] { criterion_4(closed); });
    } else {
        for (int k : {2, 3, 4}) report(k, false, "criterion-1 run unavailable");
    }

    guarded(5, criterion_5);
    guarded(6, [&] { criterion_6(have_closed ? base : io::load_config(config_path("paraffin_default.json"))); });
    guarded(7, criterion_7);
    guarded(8, criterion_8);

    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
