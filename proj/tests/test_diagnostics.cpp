#include <catch_amalgamated.hpp>

#include "stefan/control.hpp"
#include "stefan/diagnostics.hpp"
#include "stefan/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace stefan;
using Catch::Approx;

namespace {

OnePhaseState profile_state(double s, std::size_t n, double (*f)(double)) {
    OnePhaseState st;
    st.s = s;
    st.u.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) st.u[i] = f(static_cast<double>(i) / static_cast<double>(n));
    return st;
}

DomainSpec domain(std::size_t n) {
    DomainSpec dom;
    dom.length = 0.05;
    dom.grid_points = n;
    return dom;
}

InitialData thick_start() {
    InitialData init;
    init.s0 = 0.005;
    init.liquid = LinearProfile{1.0, 0.0};
    return init;
}

Schedule periodic(double R, double horizon) { return make_schedule({ScheduleKind::periodic, R, R, 0, {}}, horizon); }

// Smooth random profile on [0, s] vanishing at the interface.
std::vector<double> random_profile(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> amp(-2.0, 2.0);
    const double a = amp(rng), b = amp(rng), c = amp(rng), d = amp(rng);
    std::vector<double> u(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        u[i] = (1.0 - x) * (a + b * x + c * std::sin(3.0 * x) + d * std::cos(5.0 * x));
    }
    return u;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("psi norm", "[diagnostics]") {
    const ControllerConfig cfg{1e-3, 0.02};
    CHECK(psi_norm(profile_state(0.02, 20, [](double) { return 0.0; }), cfg) == 0.0);
    CHECK(psi_norm(profile_state(0.01, 20, [](double) { return 1.0; }), cfg) == Approx(0.0101));
    const auto lin = profile_state(0.001, 400, [](double x) { return 1.0 - x; });
    CHECK(psi_norm(lin, cfg) == Approx(0.001 / 3.0 + (0.001 - 0.02) * (0.001 - 0.02)).epsilon(1e-5));
}

TEST_CASE("kernel parameters", "[diagnostics][backstepping]") {
    const auto p = paraffin_liquid();
    const auto b = BacksteppingConfig::make(p, 1e-3);
    const double cap = 2.0 * std::sqrt(p.alpha() * 1e-3) / p.beta();
    CHECK(b.eps() == Approx(0.5 * cap));
    CHECK(b.phi(0.0) == Approx(-b.eps()));
    CHECK(b.psi(0.0) == Approx(b.eps()));
    CHECK(b.omega() > 0.0);
    CHECK_THROWS_AS(BacksteppingConfig::make(p, 1e-3, cap), ConfigError);
    CHECK_THROWS_AS(BacksteppingConfig::make(p, 1e-3, 0.0), ConfigError);
    CHECK_THROWS_AS(BacksteppingConfig::make(p, 0.0), ConfigError);
}

TEST_CASE("inverse kernel is a damped oscillation", "[diagnostics][backstepping]") {
    const auto p = paraffin_liquid();
    const auto b = BacksteppingConfig::make(p, 1e-3);
    const double lam = b.lambda(), om = b.omega();
    const double h = 1e-3 / std::max(lam, om);
    for (double z : {-0.01, -0.005, 0.0}) {
        const double d2 = (b.psi(z + h) - 2.0 * b.psi(z) + b.psi(z - h)) / (h * h);
        const double d1 = (b.psi(z + h) - b.psi(z - h)) / (2.0 * h);
        // e^{lam z}(P sin + Q cos) satisfies y'' - 2 lam y' + (lam^2 + om^2) y = 0
        CHECK(d2 - 2.0 * lam * d1 + (lam * lam + om * om) * b.psi(z) ==
              Approx(0.0).margin(1e-6 * (lam * lam + om * om) * b.eps()));
    }
}

TEST_CASE("forward transform identities", "[diagnostics][backstepping]") {
    const auto p = paraffin_liquid();
    const auto b = BacksteppingConfig::make(p, 1e-3);
    const std::vector<double> zero(101, 0.0);
    CHECK(max_abs(backstepping_forward(zero, 0.01, 0.0, b)) == 0.0);
    CHECK(max_abs(backstepping_inverse(zero, 0.01, 0.0, b)) == 0.0);

    std::mt19937_64 rng(99);
    const auto u = random_profile(rng, 100);
    CHECK(backstepping_forward(u, 0.01, 0.0, b).back() == Approx(0.0).margin(1e-12));
    const double X = -0.004;
    CHECK(std::abs(backstepping_forward(u, 0.01, X, b).back() - b.eps() * X) <= 1e-6 * std::max(std::abs(X), 1.0));
}

TEST_CASE("transform round trip converges at second order", "[diagnostics][backstepping][property]") {
    const auto p = paraffin_liquid();
    const auto b = BacksteppingConfig::make(p, 1e-3);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> sdist(0.002, 0.02), xdist(-0.01, 0.0);
    for (int trial = 0; trial < 5; ++trial) {
        const double s = sdist(rng), X = xdist(rng);
        std::mt19937_64 shape(rng());
        std::vector<double> errors;
        for (std::size_t n : {100, 400}) {
            std::mt19937_64 same = shape;
            const auto u = random_profile(same, n);
            const auto back = backstepping_inverse(backstepping_forward(u, s, X, b), s, X, b);
            double e = 0.0;
            for (std::size_t i = 0; i <= n; ++i) e = std::max(e, std::abs(back[i] - u[i]));
            errors.push_back(e / std::max(max_abs(u), kEpsFloor));
        }
        CHECK(errors[1] <= 1e-4);
        CHECK(errors[0] / std::max(errors[1], 1e-300) >= 8.0);
    }
}

TEST_CASE("lyapunov functional", "[diagnostics]") {
    const auto p = paraffin_liquid();
    const auto b = BacksteppingConfig::make(p, 1e-3);
    const std::vector<double> zero(51, 0.0), ones(51, 1.0);
    CHECK(lyapunov_V(zero, 0.01, 0.0, b) == 0.0);
    CHECK(lyapunov_V(ones, 0.01, 0.0, b) == Approx(4.274e4).epsilon(1e-3));
    CHECK(lyapunov_V(zero, 0.01, 0.003, b) == Approx(b.eps() / (2.0 * b.beta()) * 9e-6));
}

TEST_CASE("functionals are Lipschitz in a single node", "[diagnostics][property]") {
    const auto p = paraffin_liquid();
    const ControllerConfig cfg{1e-3, 0.02};
    const auto b = BacksteppingConfig::make(p, 1e-3);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> node(0, 99);
    std::uniform_real_distribution<double> delta(-1e-3, 1e-3);
    for (int trial = 0; trial < 30; ++trial) {
        OnePhaseState st;
        st.s = 0.008;
        st.u = random_profile(rng, 100);
        st.u.back() = 0.0;
        const std::size_t i = node(rng);
        const double d = delta(rng);
        OnePhaseState pert = st;
        pert.u[i] += d;
        const double h = st.dx();
        const double ad = std::abs(d);

        // exact bound plus round-off of the functional's own magnitude
        auto slack = [](double value) { return 64.0 * 2.2e-16 * std::abs(value); };

        const double psi0 = psi_norm(st, cfg);
        CHECK(std::abs(psi_norm(pert, cfg) - psi0) <= h * (2.0 * std::abs(st.u[i]) * ad + ad * ad) + slack(psi0));
        const double e0 = internal_energy(st, p, cfg);
        CHECK(std::abs(internal_energy(pert, p, cfg) - e0) <= p.conductivity() / p.alpha() * h * ad + slack(e0));

        const double phi_max = std::max(std::abs(b.phi(0.0)), std::abs(b.phi(-st.s)));
        const double dw = ad * (1.0 + b.beta() / b.alpha() * h * phi_max);
        const double X = st.s - cfg.setpoint;
        const double w_max = max_abs(backstepping_forward(st.u, st.s, X, b));
        const double v0 = lyapunov_V(st, cfg, b);
        CHECK(std::abs(lyapunov_V(pert, cfg, b) - v0) <=
              st.s / (2.0 * b.alpha()) * (2.0 * w_max + dw) * dw + slack(v0));
    }
}

TEST_CASE("energy residual report", "[diagnostics]") {
    std::vector<TrajectoryRow> rows(5);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k].t = 10.0 * static_cast<double>(k);
        rows[k].q = 2.0;
        rows[k].energy = -1000.0 + 20.0 * static_cast<double>(k);
    }
    auto rep = energy_conservation_residual(rows);
    CHECK(rep.pass);
    CHECK(rep.max_abs == 0.0);

    rows[3].energy += 50.0;
    rep = energy_conservation_residual(rows);
    CHECK_FALSE(rep.pass);
    CHECK(rep.max_rel == Approx(0.05));

    std::vector<TrajectoryRow> still(4);
    for (std::size_t k = 0; k < still.size(); ++k) still[k].t = static_cast<double>(k);
    CHECK(energy_conservation_residual(still).max_abs == 0.0);
}

TEST_CASE("decay fit on synthetic and simulated data", "[diagnostics][decay]") {
    std::vector<TrajectoryRow> flat(10);
    for (std::size_t k = 0; k < flat.size(); ++k) flat[k].t = static_cast<double>(k);
    const auto trivial = decay_fit(flat, 1e-3, 0.0);
    CHECK(trivial.trivially_converged);
    CHECK(trivial.pass);

    std::vector<TrajectoryRow> fast(200), slow(200);
    for (std::size_t k = 0; k < fast.size(); ++k) {
        const double t = 100.0 * static_cast<double>(k);
        fast[k].t = slow[k].t = t;
        fast[k].psi = 3.0 * std::exp(-2e-3 * t) * (1.0 + 0.1 * std::sin(t));
        slow[k].psi = 3.0 * std::exp(-1e-4 * t);
    }
    const auto ok = decay_fit(fast, 1e-3, 0.0);
    CHECK(ok.pass);
    CHECK(ok.fitted_rate == Approx(2e-3).epsilon(0.05));
    CHECK(ok.envelope_constant >= 1.0 - 1e-12);
    CHECK(std::isfinite(ok.envelope_constant));
    const auto bad = decay_fit(slow, 1e-3, 0.0);
    CHECK_FALSE(bad.pass);
    CHECK(bad.envelope_constant >= 1.0 - 1e-12);

    // uncontrolled run: the front stalls short of the setpoint and Psi levels off
    const auto p = paraffin_liquid();
    const ControllerConfig cfg{1e-3, 0.02};
    const auto sched = periodic(600.0, 7200.0);
    PiecewiseConstantInput<OnePhaseState> zero(sched, std::vector<double>(sched.size(), 0.0));
    SimulationOptions opts;
    opts.horizon = 7200.0;
    opts.reference = cfg;
    const auto res = simulate(thick_start(), domain(50), p, zero, opts);
    REQUIRE(res.trajectory.completed());
    const auto fit = decay_fit(res.trajectory.rows, decay_rate_bound(cfg, p), 600.0);
    CHECK_FALSE(fit.pass);
    CHECK(fit.fitted_rate < 0.9 * decay_rate_bound(cfg, p));
}

TEST_CASE("validity report on equilibrium and on an over-aggressive gain", "[diagnostics][validity]") {
    const auto p = paraffin_liquid();
    {
        InitialData init;
        init.s0 = 0.01;
        init.liquid = ConstantProfile{0.0};
        const ControllerConfig cfg{1e-3, 0.01};
        const auto sched = periodic(600.0, 3600.0);
        ZohController<OnePhaseState, MaterialParams> ctrl(p, cfg, sched);
        SimulationOptions opts;
        opts.horizon = 3600.0;
        opts.reference = cfg;
        const auto res = simulate(init, domain(40), p, ctrl, opts);
        CHECK(validity_report_one_phase(res.trajectory).pass());
    }
    {
        // c R = 3: the first hold overshoots the setpoint and later holds go negative
        const ControllerConfig cfg{5e-3, 0.02};
        const auto sched = periodic(600.0, 6 * 600.0);
        ZohController<OnePhaseState, MaterialParams> ctrl(p, cfg, sched);
        SimulationOptions opts;
        opts.horizon = 6 * 600.0;
        opts.reference = cfg;
        const auto res = simulate(thick_start(), domain(40), p, ctrl, opts);
        const auto rep = validity_report_one_phase(res.trajectory);
        CHECK_FALSE(rep.pass());
        const bool flagged = !rep.find("interface_monotone")->passed ||
                             !rep.find("interface_below_setpoint")->passed ||
                             !rep.find("boundary_above_melting")->passed;
        CHECK(flagged);
    }
}

TEST_CASE("solid decay check", "[diagnostics][validity]") {
    std::vector<TrajectoryRow> rows(50);
    const double alpha_s = 1e-7, L = 0.05;
    const double rate = alpha_s / (2.0 * L * L);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k].t = 1000.0 * static_cast<double>(k);
        rows[k].solid_norm = 2.0 * std::exp(-2.0 * rate * rows[k].t);
    }
    auto rep = solid_decay_check(rows, alpha_s, L);
    CHECK(rep.pass);
    CHECK(rep.worst_ratio == Approx(1.0));
    rows[30].solid_norm *= 100.0;
    rep = solid_decay_check(rows, alpha_s, L);
    CHECK_FALSE(rep.pass);
}
