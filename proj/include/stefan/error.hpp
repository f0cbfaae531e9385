#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace stefan {

/// Compact %g rendering of a number for messages.
inline std::string to_text(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nonpositive or otherwise unusable physical constant.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Sampling schedule that cannot satisfy 0 < r <= gap <= R.
class ScheduleError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The interface left the admissible interval; the run cannot continue.
class DomainExhaustedError : public Error {
public:
    using Error::Error;
};

/// Linear solver breakdown or non-finite state.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (e.g. sampling off-schedule).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// One violated clause reported by a validator.
struct Violation {
    std::string code;     ///< short machine-readable tag
    std::string message;  ///< human-readable description
};

using Violations = std::vector<Violation>;

inline bool has_violation(const Violations& v, const std::string& code) {
    for (const auto& item : v) {
        if (item.code == code) return true;
    }
    return false;
}

inline std::string join_messages(const Violations& v) {
    std::string out;
    for (const auto& item : v) {
        if (!out.empty()) out += "; ";
        out += item.message;
    }
    return out;
}

}  // namespace stefan
