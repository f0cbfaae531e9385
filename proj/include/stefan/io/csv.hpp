#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "stefan/control.hpp"
#include "stefan/error.hpp"
#include "stefan/trajectory.hpp"

namespace stefan::io {

inline constexpr const char* kOnePhaseHeader =
    "t[s],s[m],sdot[m/s],q_c[W/m2],T_boundary[degC],E_tilde[J/m2],Psi,V,validity_flag";
inline constexpr const char* kTwoPhaseHeader =
    "t[s],s[m],sdot[m/s],q_c[W/m2],T_boundary[degC],E_tilde[J/m2],Psi,V2,validity_flag";

inline const char* csv_header(Phase phase) {
    return phase == Phase::two_phase ? kTwoPhaseHeader : kOnePhaseHeader;
}

/// Shortest round-trip decimal form; "nan" for missing values.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

/**
 * Writes rows with the one- or two-phase header. Each row is checked on
 * write: t strictly increasing, and q_c may only change at a sampling
 * instant (`switch_times`, matched exactly).
 */
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::span<const double> switch_times) {
    out << csv_header(traj.phase) << '\n';
    for (std::size_t k = 0; k < traj.rows.size(); ++k) {
        const auto& r = traj.rows[k];
        if (k > 0) {
            const auto& prev = traj.rows[k - 1];
            if (!(r.t > prev.t)) {
                throw ContractViolation("trajectory rows must have strictly increasing t (row " + std::to_string(k) +
                                        ")");
            }
            if (r.q != prev.q && !std::binary_search(switch_times.begin(), switch_times.end(), r.t)) {
                throw ContractViolation("q_c changes between sampling instants at t = " + format_number(r.t));
            }
        }
        const double extra = traj.phase == Phase::two_phase ? r.solid_norm : r.lyapunov;
        out << format_number(r.t) << ',' << format_number(r.s) << ',' << format_number(r.sdot) << ','
            << format_number(r.q) << ',' << format_number(r.boundary_temp) << ',' << format_number(r.energy) << ','
            << format_number(r.psi) << ',' << format_number(extra) << ',' << (r.valid ? 1 : 0) << '\n';
    }
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                                 std::span<const double> switch_times) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_trajectory_csv(out, traj, switch_times);
}

/// Contents of a trajectory file.
struct TrajectoryFile {
    Phase phase{Phase::one_phase};
    std::vector<TrajectoryRow> rows;
};

/// Parses a trajectory file; throws ConfigError on any schema mismatch.
inline TrajectoryFile read_trajectory_csv(std::istream& in) {
    TrajectoryFile file;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("trajectory file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == kOnePhaseHeader) {
        file.phase = Phase::one_phase;
    } else if (line == kTwoPhaseHeader) {
        file.phase = Phase::two_phase;
    } else {
        throw ConfigError("unexpected trajectory header: " + line);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double x = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size()) {
                throw ConfigError("line " + std::to_string(lineno) + ": cannot parse '" + cell + "'");
            }
            v.push_back(x);
        }
        if (v.size() != 9) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 9 columns, got " +
                              std::to_string(v.size()));
        }
        TrajectoryRow r;
        r.t = v[0];
        r.s = v[1];
        r.sdot = v[2];
        r.q = v[3];
        r.boundary_temp = v[4];
        r.energy = v[5];
        r.psi = v[6];
        (file.phase == Phase::two_phase ? r.solid_norm : r.lyapunov) = v[7];
        r.valid = v[8] != 0.0;
        file.rows.push_back(r);
    }
    return file;
}

inline TrajectoryFile read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trajectory file " + path.string());
    return read_trajectory_csv(in);
}

}  // namespace stefan::io
