#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stefan/error.hpp"
#include "stefan/material.hpp"
#include "stefan/numerics.hpp"

namespace stefan {

/// Tolerance for the "liquid above / solid below melting temperature" monitors [degC].
inline constexpr double kTolValid = 1e-9;

/// Floor for relative-error denominators.
inline constexpr double kEpsFloor = 1e-30;

/// How the solver picks its step size.
struct TimeStepPolicy {
    /// Upper bound on the step-local diffusion number alpha*dt/(s*dxi)^2.
    double diffusion_number{1.0};
    /// Hard cap on the step [s]; infinity means "derive from the schedule".
    double max_dt{std::numeric_limits<double>::infinity()};
};

/// Spatial domain and discretization.
struct DomainSpec {
    double length{};                 ///< L [m]
    std::size_t grid_points{200};    ///< intervals on the liquid grid
    std::size_t solid_grid_points{200};
    TimeStepPolicy dt_policy{};

    void validate() const {
        if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("domain length must be > 0");
        if (grid_points < 3) throw ConfigError("grid_points must be >= 3");
        if (solid_grid_points < 3) throw ConfigError("solid_grid_points must be >= 3");
        if (!(dt_policy.diffusion_number > 0.0)) throw ConfigError("diffusion_number must be > 0");
        if (!(dt_policy.max_dt > 0.0)) throw ConfigError("max_dt must be > 0");
    }
};

// Temperature profiles are expressed as offsets above the melting point, T - Tm,
// as functions of the physical coordinate x on the phase's interval [a, b].

/// Straight line from `at_start` (x = a) to `at_end` (x = b).
struct LinearProfile {
    double at_start{};
    double at_end{};
};

/// Uniform offset.
struct ConstantProfile {
    double value{};
};

/// Tabulated (x, T - Tm) pairs, interpolated linearly; x in metres.
struct TableProfile {
    std::vector<double> x;
    std::vector<double> offset;
};

using Profile = std::variant<LinearProfile, ConstantProfile, TableProfile>;

/// Evaluates a profile at x on the phase interval [a, b].
inline double evaluate_profile(const Profile& profile, double x, double a, double b) {
    return std::visit(
        [&](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearProfile>) {
                const double w = (b > a) ? (x - a) / (b - a) : 0.0;
                return (1.0 - w) * p.at_start + w * p.at_end;
            } else if constexpr (std::is_same_v<P, ConstantProfile>) {
                return p.value;
            } else {
                return numerics::interpolate_linear(p.x, p.offset, x);
            }
        },
        profile);
}

/// Samples a profile on n+1 uniform nodes of [a, b].
inline std::vector<double> sample_profile(const Profile& profile, double a, double b, std::size_t n) {
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
        out[i] = evaluate_profile(profile, i == n ? b : x, a, b);
    }
    return out;
}

/// Initial interface position and temperature profile(s).
struct InitialData {
    double s0{};
    Profile liquid{LinearProfile{1.0, 0.0}};
    /// Only used by the two-phase solver.
    Profile solid{ConstantProfile{0.0}};
};

namespace detail {
inline void check_table(const Profile& profile, Violations& out, const char* phase) {
    if (const auto* t = std::get_if<TableProfile>(&profile)) {
        if (t->x.size() != t->offset.size() || t->x.size() < 2) {
            out.push_back({"bad_table", std::string(phase) + " profile table needs >= 2 matching (x, T) pairs"});
            return;
        }
        for (std::size_t i = 1; i < t->x.size(); ++i) {
            if (!(t->x[i] > t->x[i - 1])) {
                out.push_back({"bad_table", std::string(phase) + " profile table x must be strictly increasing"});
                return;
            }
        }
    }
}
}  // namespace detail

/**
 * Checks the initial data against the model's validity conditions.
 *
 * The interface must lie strictly inside (0, L) and the liquid must not be
 * subcooled anywhere on the solver grid. Returns every violated clause; an
 * empty list means the data is admissible.
 */
inline Violations validate_initial_data(const InitialData& init, const DomainSpec& dom,
                                        const MaterialParams& /*params*/) {
    Violations out;
    if (!(init.s0 > 0.0) || !(init.s0 < dom.length)) {
        out.push_back({"interface_outside_domain",
                       "initial interface s0 must satisfy 0 < s0 < L (s0 = " + to_text(init.s0) +
                           ", L = " + to_text(dom.length) + ")"});
        return out;
    }
    detail::check_table(init.liquid, out, "liquid");
    if (!out.empty()) return out;
    const auto u = sample_profile(init.liquid, 0.0, init.s0, dom.grid_points);
    const double lowest = *std::min_element(u.begin(), u.end());
    if (lowest < -1e-12) {
        out.push_back({"subcooled_liquid", "subcooled initial liquid: min(T0 - Tm) = " + to_text(lowest)});
    }
    for (double v : u) {
        if (!std::isfinite(v)) {
            out.push_back({"non_finite_profile", "initial liquid profile is not finite"});
            break;
        }
    }
    return out;
}

/// Two-phase variant: additionally requires the solid to be at or below Tm.
inline Violations validate_initial_data_two_phase(const InitialData& init, const DomainSpec& dom) {
    Violations out;
    if (!(init.s0 > 0.0) || !(init.s0 < dom.length)) {
        out.push_back({"interface_outside_domain", "initial interface s0 must satisfy 0 < s0 < L"});
        return out;
    }
    detail::check_table(init.liquid, out, "liquid");
    detail::check_table(init.solid, out, "solid");
    if (!out.empty()) return out;
    const auto u = sample_profile(init.liquid, 0.0, init.s0, dom.grid_points);
    const auto v = sample_profile(init.solid, init.s0, dom.length, dom.solid_grid_points);
    if (*std::min_element(u.begin(), u.end()) < -1e-12) {
        out.push_back({"subcooled_liquid", "subcooled initial liquid"});
    }
    if (*std::max_element(v.begin(), v.end()) > 1e-12) {
        out.push_back({"superheated_solid", "initial solid above melting temperature"});
    }
    return out;
}

/// Smallest admissible start for the immobilized grid: s0 >= L/N.
inline double minimum_start(const DomainSpec& dom) {
    return dom.length / static_cast<double>(dom.grid_points);
}

}  // namespace stefan
