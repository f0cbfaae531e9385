#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stefan/app/oracle.hpp"
#include "stefan/app/run.hpp"
#include "stefan/diagnostics.hpp"
#include "stefan/io/config.hpp"
#include "stefan/io/csv.hpp"

namespace stefan::app {

/// Exit-code contract of the command-line tool.
enum ExitCode : int { kSuccess = 0, kValidityFailure = 1, kConfigError = 2 };

// ---------------------------------------------------------------------------
// Logging (STEFAN_LOG = quiet | info | debug)

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
    const char* env = std::getenv("STEFAN_LOG");
    if (!env) return LogLevel::info;
    const std::string v = env;
    if (v == "quiet" || v == "0" || v == "error") return LogLevel::quiet;
    if (v == "debug" || v == "2") return LogLevel::debug;
    return LogLevel::info;
}

inline void log(LogLevel level, const std::string& msg) {
    static std::mutex mu;
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[stefan] " << msg << '\n';
}

// ---------------------------------------------------------------------------

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    bool two_phase{false};
};

inline io::RunConfig apply(io::RunConfig cfg, const Overrides& o) {
    if (o.seed) cfg.schedule.seed = *o.seed;
    if (o.two_phase) {
        if (!cfg.solid_material) throw ConfigError("--two-phase requires a solid_material section in the config");
        cfg.controller.phase = Phase::two_phase;
    }
    return cfg;
}

/// Writes trajectory and summary of a finished run into out_dir.
inline void write_outputs(const RunReport& rep, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    io::write_trajectory_csv(out_dir / rep.config.output.csv, rep.trajectory, rep.schedule.instants);
    std::ofstream js(out_dir / rep.config.output.summary);
    if (!js) throw ConfigError("cannot write " + (out_dir / rep.config.output.summary).string());
    js << summary_json(rep).dump(2) << '\n';
}

/**
 * simulate: 0 on success, 1 when a validity check fails or the run aborts
 * (the partial trajectory is still written), 2 on configuration errors.
 */
inline int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                        const Overrides& overrides = {}, std::ostream& out = std::cout) {
    RunReport rep;
    try {
        const io::RunConfig cfg = apply(io::load_config(config_path), overrides);
        log(LogLevel::debug, "loaded " + config_path.string());
        rep = execute(cfg);
        write_outputs(rep, out_dir);
    } catch (const ConfigError& e) {
        out << "configuration rejected: " << e.what() << '\n';
        return kConfigError;
    }
    const auto& tr = rep.trajectory;
    out << "termination: " << to_string(tr.termination) << (tr.message.empty() ? "" : " (" + tr.message + ")") << '\n';
    out << "final s = " << io::format_number(tr.rows.back().s) << " m at t = " << io::format_number(tr.rows.back().t)
        << " s after " << tr.monitor.steps << " steps\n";
    for (const auto& c : rep.validity.checks) {
        out << (c.passed ? "  ok   " : "  FAIL ") << c.name << ": " << c.detail << '\n';
    }
    out << "decay: b = " << io::format_number(rep.decay.theoretical_rate)
        << ", fitted = " << io::format_number(rep.decay.fitted_rate) << ", M = "
        << io::format_number(rep.decay.envelope_constant) << '\n';
    log(LogLevel::info, "wrote " + (out_dir / rep.config.output.csv).string());
    return rep.exit_code();
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    std::size_t index{};
    double gain{}, upper_diameter{}, setpoint{};
    int exit_code{kConfigError};
    std::string status;
    double b{kNaN}, b_fit{kNaN}, envelope{kNaN}, final_s{kNaN};
    bool decay_pass{false}, monotone{false}, valid{false};
    std::string message;
};

inline std::string csv_quote(const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += (c == '\n' ? ' ' : c);
    }
    return q + '"';
}

/// Cartesian product of sweep values; each run is independent.
inline std::vector<io::RunConfig> expand_sweep(const io::RunConfig& base) {
    if (!base.sweep) throw ConfigError("sweep requires a sweep section (c, R, s_r lists)");
    std::vector<io::RunConfig> runs;
    for (double c : base.sweep->gain) {
        for (double R : base.sweep->upper_diameter) {
            for (double sr : base.sweep->setpoint) {
                io::RunConfig cfg = base;
                cfg.sweep.reset();
                cfg.controller.gain = c;
                cfg.controller.setpoint = sr;
                cfg.schedule.upper_diameter = R;
                if (cfg.schedule.kind == ScheduleKind::periodic) cfg.schedule.lower_diameter = R;
                runs.push_back(cfg);
            }
        }
    }
    return runs;
}

inline SweepRow run_sweep_case(std::size_t index, const io::RunConfig& cfg, const std::filesystem::path& dir) {
    SweepRow row;
    row.index = index;
    row.gain = cfg.controller.gain;
    row.upper_diameter = cfg.schedule.upper_diameter;
    row.setpoint = cfg.controller.setpoint;
    try {
        const RunReport rep = execute(cfg);
        write_outputs(rep, dir);
        row.exit_code = rep.exit_code();
        row.status = rep.valid() ? "ok" : "invalid";
        row.b = rep.decay.theoretical_rate;
        row.b_fit = rep.decay.fitted_rate;
        row.envelope = rep.decay.envelope_constant;
        row.final_s = rep.trajectory.rows.back().s;
        row.decay_pass = rep.decay.pass;
        const Check* mono = rep.validity.find("interface_monotone");
        row.monotone = mono ? mono->passed : rep.trajectory.monitor.max_s_decrease <= 1e-9;
        row.valid = rep.valid();
        row.message = rep.trajectory.message;
    } catch (const ConfigError& e) {
        row.exit_code = kConfigError;
        row.status = "rejected";
        row.message = e.what();
    } catch (const std::exception& e) {
        row.exit_code = kValidityFailure;
        row.status = "error";
        row.message = e.what();
    }
    return row;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "run,c[1/s],R[s],s_r[m],cR,exit_code,status,b[1/s],b_fit[1/s],M,decay_pass,monotone,valid,final_s[m],"
           "message\n";
    for (const auto& r : rows) {
        out << r.index << ',' << io::format_number(r.gain) << ',' << io::format_number(r.upper_diameter) << ','
            << io::format_number(r.setpoint) << ',' << io::format_number(r.gain * r.upper_diameter) << ','
            << r.exit_code << ',' << r.status << ',' << io::format_number(r.b) << ',' << io::format_number(r.b_fit)
            << ',' << io::format_number(r.envelope) << ',' << r.decay_pass << ',' << r.monotone << ',' << r.valid
            << ',' << io::format_number(r.final_s) << ',' << csv_quote(r.message) << '\n';
    }
}

/**
 * sweep: runs every combination with up to `workers` concurrent runs,
 * per-run outputs in out_dir/run_NNN, aggregated table in out_dir/sweep.csv.
 * Per-run failures are recorded and the sweep continues.
 */
inline int cmd_sweep(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                     unsigned workers = 1, const Overrides& overrides = {}, std::ostream& out = std::cout) {
    std::vector<io::RunConfig> runs;
    try {
        runs = expand_sweep(apply(io::load_config(config_path), overrides));
    } catch (const ConfigError& e) {
        out << "configuration rejected: " << e.what() << '\n';
        return kConfigError;
    }
    std::filesystem::create_directories(out_dir);
    std::vector<SweepRow> rows(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < runs.size(); k = next++) {
            char name[32];
            std::snprintf(name, sizeof name, "run_%03zu", k);
            log(LogLevel::debug, std::string("starting ") + name);
            rows[k] = run_sweep_case(k, runs[k], out_dir / name);
            log(LogLevel::info, std::string(name) + ": " + rows[k].status);
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(runs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ofstream csv(out_dir / "sweep.csv");
    if (!csv) {
        out << "cannot write " << (out_dir / "sweep.csv").string() << '\n';
        return kConfigError;
    }
    write_sweep_csv(csv, rows);
    write_sweep_csv(out, rows);
    return kSuccess;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyReport {
    std::vector<Check> checks;
    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
};

/// Re-checks a stored trajectory against its configuration.
inline VerifyReport verify_trajectory(const io::TrajectoryFile& file, const io::RunConfig& cfg) {
    VerifyReport rep;
    auto add = [&](std::string name, bool ok, std::string detail) {
        rep.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    const auto& rows = file.rows;
    const bool two = file.phase == Phase::two_phase;
    add("phase_matches_config", two == cfg.two_phase(),
        std::string("file is ") + (two ? "two-phase" : "one-phase"));
    if (two != cfg.two_phase()) return rep;
    if (rows.size() < 2) {
        add("rows_present", false, "fewer than two rows");
        return rep;
    }

    bool increasing = true;
    for (std::size_t k = 1; k < rows.size(); ++k) increasing = increasing && rows[k].t > rows[k - 1].t;
    add("time_strictly_increasing", increasing, std::to_string(rows.size()) + " rows");

    const Schedule sched = make_schedule(cfg.schedule, cfg.horizon);
    bool held = true;
    std::string where;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].q != rows[k - 1].q &&
            !std::binary_search(sched.instants.begin(), sched.instants.end(), rows[k].t)) {
            held = false;
            where = "q_c changes at t = " + io::format_number(rows[k].t);
            break;
        }
    }
    add("input_held_between_samples", held, held ? "q_c changes only at sampling instants" : where);

    const auto energy = energy_conservation_residual(rows);
    add("energy_conservation", energy.pass,
        "max |dE - q dt| / |E0| = " + io::format_number(energy.max_rel) + " (tol " +
            io::format_number(energy.tolerance) + ")");

    const bool flags = std::all_of(rows.begin(), rows.end(), [](const TrajectoryRow& r) { return r.valid; });
    add("validity_flags", flags, flags ? "all rows valid" : "rows flagged invalid");

    double lo = rows.front().s, hi = lo, drop = 0.0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        lo = std::min(lo, rows[k].s);
        hi = std::max(hi, rows[k].s);
        drop = std::max(drop, rows[k - 1].s - rows[k].s);
    }
    add("interface_in_domain", lo > 0.0 && hi < cfg.domain.length,
        "s in [" + io::format_number(lo) + ", " + io::format_number(hi) + "]");

    const bool controlled = cfg.mode != io::InputMode::zero_input;
    if (!two) {
        Trajectory traj;
        traj.rows = rows;
        traj.length = cfg.domain.length;
        traj.setpoint = cfg.controller.setpoint;
        traj.melting_temp = cfg.material.melting_temp();
        const auto v = validity_report_one_phase(traj, controlled);
        for (const auto& c : v.checks) {
            if (c.name != "liquid_above_melting" && c.name != "interface_in_domain") rep.checks.push_back(c);
        }
        if (cfg.mode == io::InputMode::closed_loop) {
            const auto d = decay_fit(rows, decay_rate_bound(cfg.controller, cfg.material),
                                     sched.size() > 1 ? sched.instants[1] : 0.0);
            add("decay_rate", d.pass,
                "fitted " + io::format_number(d.fitted_rate) + " 1/s vs b = " + io::format_number(d.theoretical_rate) +
                    ", M = " + io::format_number(d.envelope_constant));
        }
    } else {
        const TwoPhaseParams p = cfg.two_phase_params();
        Trajectory traj;
        traj.phase = Phase::two_phase;
        traj.rows = rows;
        traj.length = cfg.domain.length;
        traj.setpoint = cfg.controller.setpoint;
        double cumulative = 0.0;
        for (std::size_t k = 0; k < traj.rows.size(); ++k) {
            if (k > 0) cumulative += traj.rows[k - 1].q * (traj.rows[k].t - traj.rows[k - 1].t);
            traj.rows[k].cumulative_input = cumulative;
        }
        const double s_inf = s_infinity(cfg.initial, cfg.domain, p);
        const auto v = validity_monitor_two_phase(traj, s_inf, p.gamma());
        if (const Check* c = v.find("cumulative_input_budget")) rep.checks.push_back(*c);
        const auto sd = solid_decay_check(rows, p.solid().alpha(), cfg.domain.length);
        add("solid_energy_envelope", sd.pass,
            "max V2(t) / (V2(0) e^{-alpha_s t/(2L^2)}) = " + io::format_number(sd.worst_ratio));
    }
    return rep;
}

inline int cmd_verify(const std::filesystem::path& trajectory_path, const std::filesystem::path& config_path,
                      std::ostream& out = std::cout) {
    VerifyReport rep;
    try {
        const io::RunConfig cfg = io::load_config(config_path);
        const io::TrajectoryFile file = io::read_trajectory_csv(trajectory_path);
        rep = verify_trajectory(file, cfg);
    } catch (const ConfigError& e) {
        out << "cannot verify: " << e.what() << '\n';
        return kConfigError;
    } catch (const ScheduleError& e) {
        out << "cannot verify: " << e.what() << '\n';
        return kConfigError;
    }
    for (const auto& c : rep.checks) out << (c.passed ? "  ok   " : "  FAIL ") << c.name << ": " << c.detail << '\n';
    out << (rep.pass() ? "PASS" : "FAIL") << '\n';
    return rep.pass() ? kSuccess : kValidityFailure;
}

// ---------------------------------------------------------------------------
// oracle

inline void write_oracle_table(std::ostream& out, const OracleTable& t) {
    out << "N,max_rel_error,observed_order,steps\n";
    for (std::size_t k = 0; k < t.levels.size(); ++k) {
        out << t.levels[k].grid_points << ',' << io::format_number(t.levels[k].max_rel_error) << ','
            << (k == 0 ? std::string("nan") : io::format_number(t.orders[k - 1])) << ',' << t.levels[k].steps << '\n';
    }
}

/// oracle: convergence table against the Neumann solution; passes when order >= 1.8 at the finest pair.
/// Coarser grids cannot resolve the initial similarity profile.
inline constexpr std::size_t kOracleMinGrid = 10;

inline int cmd_oracle(const std::vector<std::size_t>& grid_points, const std::optional<std::filesystem::path>& out_dir,
                      std::ostream& out = std::cout) {
    if (grid_points.size() < 2) {
        out << "oracle needs at least two grid sizes\n";
        return kConfigError;
    }
    for (std::size_t n : grid_points) {
        if (n < kOracleMinGrid) {
            out << "configuration rejected: oracle grid N = " << n << " is below the minimum " << kOracleMinGrid
                << '\n';
            return kConfigError;
        }
    }
    OracleTable table;
    try {
        table = oracle_convergence(grid_points);
    } catch (const ConfigError& e) {
        out << "configuration rejected: " << e.what() << '\n';
        return kConfigError;
    }
    write_oracle_table(out, table);
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        std::ofstream f(*out_dir / "oracle.csv");
        write_oracle_table(f, table);
    }
    const bool ok = table.pass();
    out << (ok ? "PASS" : "FAIL") << ": observed order " << io::format_number(table.finest_order)
        << " (required >= 1.8), errors " << (table.monotone ? "decreasing" : "not decreasing") << '\n';
    return ok ? kSuccess : kValidityFailure;
}

}  // namespace stefan::app
