#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stefan/control.hpp"
#include "stefan/domain.hpp"
#include "stefan/error.hpp"
#include "stefan/material.hpp"
#include "stefan/schedule.hpp"
#include "stefan/trajectory.hpp"
#include "stefan/two_phase.hpp"

namespace stefan::io {

using Json = nlohmann::json;

/// How the boundary input is produced.
enum class InputMode { closed_loop, open_loop, zero_input };

inline const char* to_string(InputMode m) {
    switch (m) {
        case InputMode::closed_loop: return "closed_loop";
        case InputMode::open_loop: return "open_loop";
        case InputMode::zero_input: return "zero_input";
    }
    return "?";
}

struct OutputSpec {
    double stride{kNaN};  ///< seconds between rows; NaN means horizon/2000
    std::string csv{"trajectory.csv"};
    std::string summary{"summary.json"};
};

/// Cartesian-product sweep over controller and schedule parameters.
struct SweepSpec {
    std::vector<double> gain;
    std::vector<double> upper_diameter;
    std::vector<double> setpoint;
};

struct RunConfig {
    MaterialParams material{paraffin_liquid()};
    std::optional<MaterialParams> solid_material;
    DomainSpec domain;
    InitialData initial;
    ScheduleSpec schedule;
    double horizon{};
    ControllerConfig controller;
    InputMode mode{InputMode::closed_loop};
    std::optional<double> epsilon;  ///< backstepping parameter for the V column
    OutputSpec output;
    std::optional<SweepSpec> sweep;

    bool two_phase() const { return controller.phase == Phase::two_phase; }
    TwoPhaseParams two_phase_params() const {
        if (!solid_material) throw ConfigError("two-phase run requires a solid_material section");
        return TwoPhaseParams::make(material, *solid_material);
    }
    double row_stride() const { return std::isnan(output.stride) ? horizon / 2000.0 : output.stride; }
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError("unknown key " + where + "." + it.key());
    }
}

inline const Json& section(const Json& root, const char* name) {
    if (!root.contains(name)) throw ConfigError(std::string("missing section ") + name);
    return root.at(name);
}

inline double number(const Json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) throw ConfigError("missing key " + where + "." + key);
    const Json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

inline double number_or(const Json& obj, const std::string& where, const char* key, double fallback) {
    return obj.contains(key) && !obj.at(key).is_null() ? number(obj, where, key) : fallback;
}

inline std::vector<double> numbers(const Json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) throw ConfigError("missing key " + where + "." + key);
    const Json& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

// Either `key` in SI or `key_per_g` in per-gram units (x1000).
inline double si_or_per_gram(const Json& obj, const std::string& where, const char* key) {
    const std::string per_g = std::string(key) + "_per_g";
    const bool si = obj.contains(key), pg = obj.contains(per_g);
    if (si == pg) throw ConfigError(where + " needs exactly one of " + key + " or " + per_g);
    return si ? number(obj, where, key) : 1000.0 * number(obj, where, per_g.c_str());
}

inline MaterialParams parse_material(const Json& j, const std::string& where) {
    reject_unknown(j, where,
                   {"density", "heat_capacity", "heat_capacity_per_g", "conductivity", "latent_heat",
                    "latent_heat_per_g", "melting_temp"});
    try {
        return MaterialParams::make(number(j, where, "density"), si_or_per_gram(j, where, "heat_capacity"),
                                    number(j, where, "conductivity"), si_or_per_gram(j, where, "latent_heat"),
                                    number(j, where, "melting_temp"));
    } catch (const ParameterError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline Profile parse_profile(const Json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw ConfigError(where + " must be an object with a string 'kind'");
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        reject_unknown(j, where, {"kind", "start", "end"});
        return LinearProfile{number(j, where, "start"), number(j, where, "end")};
    }
    if (kind == "constant") {
        reject_unknown(j, where, {"kind", "value"});
        return ConstantProfile{number(j, where, "value")};
    }
    if (kind == "table") {
        reject_unknown(j, where, {"kind", "x", "offset"});
        return TableProfile{numbers(j, where, "x"), numbers(j, where, "offset")};
    }
    throw ConfigError(where + ".kind must be linear, constant or table (got '" + kind + "')");
}

inline Json profile_to_json(const Profile& p) {
    return std::visit(
        [](const auto& v) -> Json {
            using P = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<P, LinearProfile>) {
                return {{"kind", "linear"}, {"start", v.at_start}, {"end", v.at_end}};
            } else if constexpr (std::is_same_v<P, ConstantProfile>) {
                return {{"kind", "constant"}, {"value", v.value}};
            } else {
                return {{"kind", "table"}, {"x", v.x}, {"offset", v.offset}};
            }
        },
        p);
}

inline Json material_to_json(const MaterialParams& m) {
    return {{"density", m.density()},           {"heat_capacity", m.heat_capacity()},
            {"conductivity", m.conductivity()}, {"latent_heat", m.latent_heat()},
            {"melting_temp", m.melting_temp()}};
}

}  // namespace detail

/**
 * Builds a RunConfig from a parsed document. Unknown keys are rejected so
 * that typos do not silently fall back to defaults.
 */
inline RunConfig parse_config(const Json& root) {
    using namespace detail;
    reject_unknown(root, "config",
                   {"material", "solid_material", "domain", "initial", "schedule", "controller", "diagnostics",
                    "output", "sweep"});
    RunConfig cfg;
    cfg.material = parse_material(section(root, "material"), "material");
    if (root.contains("solid_material")) cfg.solid_material = parse_material(root.at("solid_material"), "solid_material");

    const Json& dom = section(root, "domain");
    reject_unknown(dom, "domain", {"length", "grid_points", "solid_grid_points", "dt_policy"});
    cfg.domain.length = number(dom, "domain", "length");
    auto count = [&](const char* key, std::size_t fallback) -> std::size_t {
        if (!dom.contains(key)) return fallback;
        const Json& v = dom.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw ConfigError(std::string("domain.") + key + " must be a non-negative integer");
        }
        return v.get<std::size_t>();
    };
    cfg.domain.grid_points = count("grid_points", cfg.domain.grid_points);
    cfg.domain.solid_grid_points = count("solid_grid_points", cfg.domain.solid_grid_points);
    if (dom.contains("dt_policy")) {
        const Json& dt = dom.at("dt_policy");
        reject_unknown(dt, "domain.dt_policy", {"diffusion_number", "max_dt"});
        cfg.domain.dt_policy.diffusion_number =
            number_or(dt, "domain.dt_policy", "diffusion_number", cfg.domain.dt_policy.diffusion_number);
        cfg.domain.dt_policy.max_dt = number_or(dt, "domain.dt_policy", "max_dt", cfg.domain.dt_policy.max_dt);
    }

    const Json& ini = section(root, "initial");
    reject_unknown(ini, "initial", {"s0", "profile", "solid_profile"});
    cfg.initial.s0 = number(ini, "initial", "s0");
    if (ini.contains("profile")) cfg.initial.liquid = parse_profile(ini.at("profile"), "initial.profile");
    if (ini.contains("solid_profile")) cfg.initial.solid = parse_profile(ini.at("solid_profile"), "initial.solid_profile");

    const Json& sch = section(root, "schedule");
    reject_unknown(sch, "schedule", {"kind", "r", "R", "seed", "instants", "horizon"});
    const std::string kind = sch.value("kind", std::string("periodic"));
    if (kind == "periodic") {
        cfg.schedule.kind = ScheduleKind::periodic;
    } else if (kind == "uniform-random") {
        cfg.schedule.kind = ScheduleKind::uniform_random;
    } else if (kind == "explicit") {
        cfg.schedule.kind = ScheduleKind::explicit_list;
    } else {
        throw ConfigError("schedule.kind must be periodic, uniform-random or explicit (got '" + kind + "')");
    }
    cfg.horizon = number(sch, "schedule", "horizon");
    if (cfg.schedule.kind == ScheduleKind::explicit_list) {
        cfg.schedule.instants = numbers(sch, "schedule", "instants");
        cfg.schedule.lower_diameter = number_or(sch, "schedule", "r", 0.0);
        cfg.schedule.upper_diameter = number_or(sch, "schedule", "R", 0.0);
    } else {
        cfg.schedule.upper_diameter = number(sch, "schedule", "R");
        cfg.schedule.lower_diameter = number_or(sch, "schedule", "r", cfg.schedule.upper_diameter);
    }
    if (sch.contains("seed")) {
        if (!sch.at("seed").is_number_unsigned()) throw ConfigError("schedule.seed must be a non-negative integer");
        cfg.schedule.seed = sch.at("seed").get<std::uint64_t>();
    }

    const Json& ctl = section(root, "controller");
    reject_unknown(ctl, "controller", {"c", "s_r", "phase", "mode"});
    cfg.controller.gain = number(ctl, "controller", "c");
    cfg.controller.setpoint = number(ctl, "controller", "s_r");
    const std::string phase = ctl.value("phase", std::string("one_phase"));
    if (phase == "one_phase") {
        cfg.controller.phase = Phase::one_phase;
    } else if (phase == "two_phase") {
        cfg.controller.phase = Phase::two_phase;
    } else {
        throw ConfigError("controller.phase must be one_phase or two_phase (got '" + phase + "')");
    }
    const std::string mode = ctl.value("mode", std::string("closed_loop"));
    if (mode == "closed_loop") {
        cfg.mode = InputMode::closed_loop;
    } else if (mode == "open_loop") {
        cfg.mode = InputMode::open_loop;
    } else if (mode == "zero_input") {
        cfg.mode = InputMode::zero_input;
    } else {
        throw ConfigError("controller.mode must be closed_loop, open_loop or zero_input (got '" + mode + "')");
    }

    if (root.contains("diagnostics")) {
        const Json& d = root.at("diagnostics");
        reject_unknown(d, "diagnostics", {"epsilon"});
        if (d.contains("epsilon") && !d.at("epsilon").is_null()) cfg.epsilon = number(d, "diagnostics", "epsilon");
    }

    if (root.contains("output")) {
        const Json& o = root.at("output");
        reject_unknown(o, "output", {"stride", "csv", "summary"});
        cfg.output.stride = number_or(o, "output", "stride", kNaN);
        cfg.output.csv = o.value("csv", cfg.output.csv);
        cfg.output.summary = o.value("summary", cfg.output.summary);
    }

    if (root.contains("sweep")) {
        const Json& s = root.at("sweep");
        reject_unknown(s, "sweep", {"c", "R", "s_r"});
        SweepSpec sw;
        sw.gain = s.contains("c") ? numbers(s, "sweep", "c") : std::vector<double>{cfg.controller.gain};
        sw.upper_diameter =
            s.contains("R") ? numbers(s, "sweep", "R") : std::vector<double>{cfg.schedule.upper_diameter};
        sw.setpoint = s.contains("s_r") ? numbers(s, "sweep", "s_r") : std::vector<double>{cfg.controller.setpoint};
        cfg.sweep = sw;
    }

    if (!(cfg.horizon > 0.0)) throw ConfigError("schedule.horizon must be > 0");
    if (cfg.two_phase() && !cfg.solid_material) throw ConfigError("two-phase run requires a solid_material section");
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    Json root;
    try {
        root = Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(root);
}

/// Inverse of parse_config (SI keys only); used to echo the resolved config.
inline Json to_json(const RunConfig& cfg) {
    Json j;
    j["material"] = detail::material_to_json(cfg.material);
    if (cfg.solid_material) j["solid_material"] = detail::material_to_json(*cfg.solid_material);
    j["domain"] = {{"length", cfg.domain.length},
                   {"grid_points", cfg.domain.grid_points},
                   {"solid_grid_points", cfg.domain.solid_grid_points},
                   {"dt_policy",
                    {{"diffusion_number", cfg.domain.dt_policy.diffusion_number},
                     {"max_dt", std::isfinite(cfg.domain.dt_policy.max_dt) ? Json(cfg.domain.dt_policy.max_dt)
                                                                           : Json(nullptr)}}}};
    j["initial"] = {{"s0", cfg.initial.s0},
                    {"profile", detail::profile_to_json(cfg.initial.liquid)},
                    {"solid_profile", detail::profile_to_json(cfg.initial.solid)}};
    Json sch = {{"kind", to_string(cfg.schedule.kind)}, {"horizon", cfg.horizon}, {"seed", cfg.schedule.seed}};
    if (cfg.schedule.kind == ScheduleKind::explicit_list) {
        sch["instants"] = cfg.schedule.instants;
    } else {
        sch["r"] = cfg.schedule.lower_diameter;
        sch["R"] = cfg.schedule.upper_diameter;
    }
    j["schedule"] = sch;
    j["controller"] = {{"c", cfg.controller.gain},
                       {"s_r", cfg.controller.setpoint},
                       {"phase", cfg.two_phase() ? "two_phase" : "one_phase"},
                       {"mode", to_string(cfg.mode)}};
    j["diagnostics"] = {{"epsilon", cfg.epsilon ? Json(*cfg.epsilon) : Json(nullptr)}};
    j["output"] = {{"stride", cfg.row_stride()}, {"csv", cfg.output.csv}, {"summary", cfg.output.summary}};
    return j;
}

/**
 * Every hypothesis the run depends on, checked before any stepping:
 * admissible initial data, the gain/sampling condition and the setpoint
 * condition. An empty list means the run may start.
 */
inline Violations validate_run(const RunConfig& cfg, const Schedule& sched) {
    Violations out;
    auto append = [&](const Violations& v) { out.insert(out.end(), v.begin(), v.end()); };
    try {
        cfg.domain.validate();
    } catch (const ConfigError& e) {
        out.push_back({"domain", e.what()});
        return out;
    }
    if (cfg.two_phase()) {
        append(validate_initial_data_two_phase(cfg.initial, cfg.domain));
    } else {
        append(validate_initial_data(cfg.initial, cfg.domain, cfg.material));
    }
    if (!out.empty()) return out;
    if (cfg.mode != InputMode::zero_input) append(validate_gain_vs_schedule(cfg.controller.gain, sched));
    if (cfg.mode == InputMode::zero_input) return out;
    if (cfg.two_phase()) {
        append(validate_setpoint_two_phase(cfg.initial, cfg.controller, cfg.two_phase_params(), cfg.domain));
    } else {
        append(validate_setpoint(cfg.initial, cfg.controller, cfg.material, cfg.domain));
    }
    return out;
}

}  // namespace stefan::io
