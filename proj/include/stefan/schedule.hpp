#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "stefan/error.hpp"

namespace stefan {

enum class ScheduleKind { periodic, uniform_random, explicit_list };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::periodic: return "periodic";
        case ScheduleKind::uniform_random: return "uniform-random";
        case ScheduleKind::explicit_list: return "explicit";
    }
    return "?";
}

/// Recipe for generating sampling instants.
struct ScheduleSpec {
    ScheduleKind kind{ScheduleKind::periodic};
    double lower_diameter{};   ///< r [s]
    double upper_diameter{};   ///< R [s]
    std::uint64_t seed{0};
    std::vector<double> instants;  ///< explicit_list only
};

/// Sampling instants t_0 = 0 < t_1 < ... together with their diameters.
struct Schedule {
    std::vector<double> instants;
    double lower_diameter{};
    double upper_diameter{};
    ScheduleKind kind{ScheduleKind::periodic};
    std::uint64_t seed{0};

    std::size_t size() const { return instants.size(); }

    /// Gap tau_j = t_{j+1} - t_j.
    double gap(std::size_t j) const { return instants.at(j + 1) - instants.at(j); }

    std::vector<double> gaps() const {
        std::vector<double> g;
        for (std::size_t j = 0; j + 1 < instants.size(); ++j) g.push_back(gap(j));
        return g;
    }
};

/**
 * Builds sampling instants covering [0, horizon].
 *
 * Periodic schedules use gap R. Uniform-random schedules draw each gap from
 * U[r, R] with a seeded mt19937_64. The last instant is the first one at or
 * beyond the horizon.
 */
inline Schedule make_schedule(const ScheduleSpec& spec, double horizon) {
    if (!(horizon > 0.0)) throw ScheduleError("schedule horizon must be > 0");

    Schedule out;
    out.kind = spec.kind;
    out.seed = spec.seed;

    if (spec.kind == ScheduleKind::explicit_list) {
        const auto& t = spec.instants;
        if (t.size() < 2) throw ScheduleError("explicit schedule needs at least two instants");
        if (t.front() != 0.0) throw ScheduleError("explicit schedule must start at t = 0");
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t j = 0; j + 1 < t.size(); ++j) {
            const double g = t[j + 1] - t[j];
            if (!(g > 0.0)) throw ScheduleError("explicit schedule instants must be strictly increasing");
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
        const double r = spec.lower_diameter > 0.0 ? spec.lower_diameter : lo;
        const double R = spec.upper_diameter > 0.0 ? spec.upper_diameter : hi;
        if (lo < r * (1.0 - 1e-12) || hi > R * (1.0 + 1e-12)) {
            throw ScheduleError("explicit schedule gaps fall outside [r, R]");
        }
        if (t.back() < horizon) throw ScheduleError("explicit schedule does not cover the horizon");
        out.instants = t;
        out.lower_diameter = r;
        out.upper_diameter = R;
        return out;
    }

    const double r = spec.lower_diameter;
    const double R = spec.upper_diameter;
    if (!(r > 0.0)) throw ScheduleError("lower diameter r must be > 0 (got " + to_text(r) + ")");
    if (r > R) throw ScheduleError("lower diameter r exceeds upper diameter R");
    out.lower_diameter = r;
    out.upper_diameter = R;

    out.instants.push_back(0.0);
    if (spec.kind == ScheduleKind::periodic) {
        // Integer multiples avoid drift from repeated addition.
        for (std::size_t j = 1;; ++j) {
            const double t = static_cast<double>(j) * R;
            out.instants.push_back(t);
            if (t >= horizon * (1.0 - 1e-12)) break;
        }
    } else {
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> gap(r, R);
        double t = 0.0;
        while (t < horizon) {
            t += (r == R) ? R : gap(rng);
            out.instants.push_back(t);
        }
    }
    return out;
}

/// Checks that the sampling diameter respects the gain bound c*R < 1.
inline Violations validate_gain_vs_schedule(double gain, const Schedule& sched) {
    Violations out;
    if (!(gain > 0.0)) {
        out.push_back({"nonpositive_gain", "controller gain c must be > 0"});
        return out;
    }
    const double R = sched.upper_diameter;
    if (!(gain * R < 1.0)) {
        out.push_back({"gain_schedule",
                       "gain/sampling condition violated: requires c*R < 1 but c*R = " +
                           to_text(gain * R) + " (R = " + to_text(R) +
                           " s, 1/c = " + to_text(1.0 / gain) + " s)"});
    }
    return out;
}

}  // namespace stefan
