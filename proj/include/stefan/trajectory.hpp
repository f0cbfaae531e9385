#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "stefan/control.hpp"

namespace stefan {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One recorded output row.
struct TrajectoryRow {
    double t{};
    double s{};
    double sdot{};
    double q{};                 ///< input applied from this row onward [W/m^2]
    double boundary_temp{};     ///< T(0, t) [degC]
    double energy{};            ///< shifted internal energy [J/m^2]
    double psi{};               ///< L2 norm of the error state
    double lyapunov{kNaN};      ///< V of the backstepping target state (one-phase)
    double solid_norm{kNaN};    ///< int_s^L (T_s - Tm)^2 dx (two-phase)
    double cumulative_input{};  ///< int_0^t q dt [J/m^2]
    bool valid{true};           ///< model validity held on every step since the previous row
};

/// State at a sampling instant t_j.
struct SampleRecord {
    std::size_t index{};
    double t{};
    double s{};
    double energy{};
    double q{};
};

enum class Termination { completed, domain_exhausted, numerical_error };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::domain_exhausted: return "domain_exhausted";
        case Termination::numerical_error: return "numerical_error";
    }
    return "?";
}

/// Running extrema over every solver step (not only recorded rows).
struct StepMonitor {
    std::size_t steps{0};
    double min_liquid{std::numeric_limits<double>::infinity()};  ///< min (T_l - Tm)
    double max_solid{-std::numeric_limits<double>::infinity()};  ///< max (T_s - Tm)
    double min_boundary_offset{std::numeric_limits<double>::infinity()};  ///< min T(0) - Tm
    double min_s{std::numeric_limits<double>::infinity()};
    double max_s{-std::numeric_limits<double>::infinity()};
    double max_s_decrease{0.0};  ///< max over steps of s_n - s_{n+1}
    double min_sdot{std::numeric_limits<double>::infinity()};
    double max_liquid_gradient{-std::numeric_limits<double>::infinity()};  ///< at the interface
    double max_solid_gradient{-std::numeric_limits<double>::infinity()};
    double max_energy_residual{0.0};  ///< max |E(t+dt) - E(t) - dt q| [J/m^2]
    bool model_valid{true};
    double first_violation_t{kNaN};
};

struct Trajectory {
    Phase phase{Phase::one_phase};
    double length{};
    double setpoint{};
    double initial_s{};
    double initial_energy{};
    double melting_temp{};
    std::vector<TrajectoryRow> rows;
    std::vector<SampleRecord> samples;
    StepMonitor monitor;
    Termination termination{Termination::completed};
    std::string message;

    bool completed() const { return termination == Termination::completed; }
};

}  // namespace stefan
