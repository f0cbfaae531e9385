#include <catch_amalgamated.hpp>

#include "stefan/app/run.hpp"
#include "stefan/io/config.hpp"
#include "stefan/io/csv.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace stefan;
using Catch::Approx;
using nlohmann::json;

namespace {

json small_config() {
    return json::parse(R"({
      "material": {"density": 790.0, "heat_capacity_per_g": 2.38, "conductivity": 0.22,
                   "latent_heat_per_g": 210.0, "melting_temp": 37.0},
      "domain": {"length": 0.05, "grid_points": 40},
      "initial": {"s0": 0.005, "profile": {"kind": "linear", "start": 1.0, "end": 0.0}},
      "schedule": {"kind": "uniform-random", "r": 300.0, "R": 600.0, "seed": 11, "horizon": 3600.0},
      "controller": {"c": 1e-3, "s_r": 0.02},
      "output": {"stride": 60.0}
    })");
}

std::string csv_of(const app::RunReport& rep) {
    std::ostringstream out;
    io::write_trajectory_csv(out, rep.trajectory, rep.schedule.instants);
    return out.str();
}

}  // namespace

TEST_CASE("config parsing converts per-gram values", "[io][config]") {
    const auto cfg = io::parse_config(small_config());
    CHECK(cfg.material.heat_capacity() == Approx(2380.0));
    CHECK(cfg.material.latent_heat() == Approx(210000.0));
    CHECK(cfg.domain.grid_points == 40);
    CHECK(cfg.schedule.kind == ScheduleKind::uniform_random);
    CHECK(cfg.schedule.seed == 11);
    CHECK(cfg.mode == io::InputMode::closed_loop);
    CHECK_FALSE(cfg.two_phase());
    CHECK(cfg.row_stride() == 60.0);
}

TEST_CASE("config parsing rejects malformed documents", "[io][config]") {
    auto typo = small_config();
    typo["controller"]["gain"] = 1e-3;
    CHECK_THROWS_AS(io::parse_config(typo), ConfigError);

    auto both = small_config();
    both["material"]["heat_capacity"] = 2380.0;
    CHECK_THROWS_AS(io::parse_config(both), ConfigError);

    auto bad_kind = small_config();
    bad_kind["initial"]["profile"]["kind"] = "cubic";
    CHECK_THROWS_AS(io::parse_config(bad_kind), ConfigError);

    auto two = small_config();
    two["controller"]["phase"] = "two_phase";
    CHECK_THROWS_AS(io::parse_config(two), ConfigError);

    auto no_horizon = small_config();
    no_horizon["schedule"].erase("horizon");
    CHECK_THROWS_AS(io::parse_config(no_horizon), ConfigError);

    auto negative_seed = small_config();
    negative_seed["schedule"]["seed"] = -1;
    CHECK_THROWS_AS(io::parse_config(negative_seed), ConfigError);
}

TEST_CASE("config survives a JSON round trip", "[io][config]") {
    const auto cfg = io::parse_config(small_config());
    const auto again = io::parse_config(io::to_json(cfg));
    CHECK(again.material.alpha() == cfg.material.alpha());
    CHECK(again.domain.grid_points == cfg.domain.grid_points);
    CHECK(again.schedule.lower_diameter == 300.0);
    CHECK(again.schedule.upper_diameter == 600.0);
    CHECK(again.schedule.seed == cfg.schedule.seed);
    CHECK(again.controller.setpoint == cfg.controller.setpoint);
    CHECK(std::isinf(again.domain.dt_policy.max_dt));
}

TEST_CASE("shipped configs parse", "[io][config]") {
    for (const char* name : {"paraffin_default", "two_phase_demo", "reject_gain", "reject_setpoint",
                             "sweep_gain_period"}) {
        INFO(name);
        const auto cfg = io::load_config(std::string(STEFAN_SOURCE_DIR) + "/configs/" + name + ".json");
        CHECK(cfg.horizon > 0.0);
    }
    const auto def = io::load_config(std::string(STEFAN_SOURCE_DIR) + "/configs/paraffin_default.json");
    CHECK(def.controller.gain == 1e-3);
    CHECK(def.controller.setpoint == 0.02);
    CHECK(def.initial.s0 == 0.001);
    CHECK(def.schedule.upper_diameter == 600.0);
    CHECK(def.domain.grid_points == 200);
    CHECK(def.row_stride() <= def.horizon / 2000.0);
}

TEST_CASE("number formatting round-trips", "[io][csv]") {
    for (double x : {0.0, 1.0, 0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 3.65652590149984e-05}) {
        CHECK(std::strtod(io::format_number(x).c_str(), nullptr) == x);
    }
    CHECK(io::format_number(std::nan("")) == "nan");
    CHECK(io::format_number(0.1) == "0.1");
}

TEST_CASE("trajectory file header and round trip", "[io][csv]") {
    const auto rep = app::execute(io::parse_config(small_config()));
    REQUIRE(rep.trajectory.completed());
    const std::string text = csv_of(rep);
    CHECK(text.substr(0, text.find('\n')) ==
          "t[s],s[m],sdot[m/s],q_c[W/m2],T_boundary[degC],E_tilde[J/m2],Psi,V,validity_flag");

    std::istringstream in(text);
    const auto file = io::read_trajectory_csv(in);
    CHECK(file.phase == Phase::one_phase);
    REQUIRE(file.rows.size() == rep.trajectory.rows.size());
    for (std::size_t k = 0; k < file.rows.size(); ++k) {
        CHECK(file.rows[k].t == rep.trajectory.rows[k].t);
        CHECK(file.rows[k].s == rep.trajectory.rows[k].s);
        CHECK(file.rows[k].q == rep.trajectory.rows[k].q);
        CHECK(file.rows[k].energy == rep.trajectory.rows[k].energy);
        CHECK(file.rows[k].lyapunov == rep.trajectory.rows[k].lyapunov);
    }
    CHECK(std::string(io::kTwoPhaseHeader).find(",V2,") != std::string::npos);
}

TEST_CASE("trajectory writer enforces its invariants", "[io][csv]") {
    Trajectory tr;
    tr.rows.resize(3);
    tr.rows[0].t = 0.0;
    tr.rows[1].t = 5.0;
    tr.rows[2].t = 10.0;
    const std::vector<double> switches{0.0, 10.0};
    std::ostringstream ok;
    CHECK_NOTHROW(io::write_trajectory_csv(ok, tr, switches));

    tr.rows[2].q = 1.0;
    std::ostringstream at_switch;
    CHECK_NOTHROW(io::write_trajectory_csv(at_switch, tr, switches));
    tr.rows[1].q = 1.0;
    tr.rows[2].q = 2.0;
    std::ostringstream off_switch;
    CHECK_THROWS_AS(io::write_trajectory_csv(off_switch, tr, switches), ContractViolation);

    tr.rows[1].q = tr.rows[2].q = 0.0;
    tr.rows[2].t = 5.0;
    std::ostringstream repeated;
    CHECK_THROWS_AS(io::write_trajectory_csv(repeated, tr, switches), ContractViolation);
}

TEST_CASE("trajectory reader rejects schema mismatches", "[io][csv]") {
    std::istringstream empty("");
    CHECK_THROWS_AS(io::read_trajectory_csv(empty), ConfigError);
    std::istringstream header("t,s,q\n0,1,2\n");
    CHECK_THROWS_AS(io::read_trajectory_csv(header), ConfigError);
    std::istringstream short_row(std::string(io::kOnePhaseHeader) + "\n0,1,2\n");
    CHECK_THROWS_AS(io::read_trajectory_csv(short_row), ConfigError);
    std::istringstream junk(std::string(io::kOnePhaseHeader) + "\n0,1,2,3,4,x,6,7,1\n");
    CHECK_THROWS_AS(io::read_trajectory_csv(junk), ConfigError);
}

TEST_CASE("same config and seed give byte-identical output", "[io][property]") {
    const auto cfg = io::parse_config(small_config());
    CHECK(csv_of(app::execute(cfg)) == csv_of(app::execute(cfg)));
    auto other = cfg;
    other.schedule.seed = 12;
    CHECK(csv_of(app::execute(other)) != csv_of(app::execute(cfg)));
}

TEST_CASE("summary document schema", "[io][summary]") {
    const auto rep = app::execute(io::parse_config(small_config()));
    const auto j = app::summary_json(rep);
    CHECK(j.at("schema") == "stefan-summary/1");
    CHECK(j.at("phase") == "one_phase");
    CHECK(j.at("mode") == "closed_loop");
    CHECK(j.at("exit_code") == rep.exit_code());
    CHECK(j.at("iterations").get<std::size_t>() == rep.trajectory.monitor.steps);
    for (const char* key : {"t", "s", "sdot", "setpoint_error"}) CHECK(j.at("final").contains(key));
    for (const char* key : {"initial", "max_step_residual", "max_row_residual_rel", "recursion_error_rel"}) {
        CHECK(j.at("energy").contains(key));
    }
    for (const char* key : {"b", "b_fit", "M", "tail_start", "tail_end", "pass"}) CHECK(j.at("decay").contains(key));
    CHECK(j.at("validity").at("checks").is_array());
    CHECK(j.at("samples").size() == rep.trajectory.samples.size());
    CHECK(j.at("samples").at(0).at("q_c").get<double>() == rep.trajectory.samples.front().q);
    CHECK(j.at("open_loop_q").size() + 1 == rep.schedule.size());
    CHECK(io::parse_config(j.at("config")).controller.gain == 1e-3);
}

TEST_CASE("run validation refuses inadmissible configurations", "[io][validation]") {
    auto gain = io::parse_config(small_config());
    gain.controller.gain = 2e-3;
    try {
        app::execute(gain);
        FAIL("expected rejection");
    } catch (const app::HypothesisError& e) {
        CHECK(has_violation(e.violations(), "gain_schedule"));
        CHECK(std::string(e.what()).find("gain/sampling condition violated") != std::string::npos);
    }

    auto beyond = io::parse_config(small_config());
    beyond.controller.setpoint = 0.06;
    try {
        app::execute(beyond);
        FAIL("expected rejection");
    } catch (const app::HypothesisError& e) {
        CHECK(has_violation(e.violations(), "setpoint_outside_domain"));
    }

    auto zero = io::parse_config(small_config());
    zero.mode = io::InputMode::zero_input;
    zero.controller.gain = 1.0;
    CHECK_NOTHROW(app::execute(zero));
}
