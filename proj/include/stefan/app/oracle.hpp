#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "stefan/control.hpp"
#include "stefan/diagnostics.hpp"
#include "stefan/error.hpp"
#include "stefan/similarity.hpp"
#include "stefan/simulate.hpp"

namespace stefan::app {

/// Neumann-solution test problem in scaled units.
struct OracleSetup {
    MaterialParams material{MaterialParams::make(1.0, 1.0, 1.0, 1.0, 0.0)};
    double superheat{1.0};
    double length{2.0};
    double start{0.1};  ///< t0 > 0; the run starts from the exact profile
    double end{1.0};
    double skip_fraction{0.05};  ///< errors before start + skip*(end-start) are ignored
    std::size_t table_points{4000};
    std::size_t rows{400};
};

struct OracleResult {
    std::size_t grid_points{};
    double max_rel_error{};  ///< max |s - s_exact| / s_exact
    std::size_t steps{};
};

/**
 * Drives the one-phase solver with the exact boundary flux of the Neumann
 * solution and compares the interface with 2 lambda sqrt(alpha t).
 */
inline OracleResult run_similarity_oracle(std::size_t grid_points, const OracleSetup& setup = {}) {
    const NeumannSolution exact(setup.material, setup.superheat);
    DomainSpec dom;
    dom.length = setup.length;
    dom.grid_points = grid_points;

    InitialData init;
    init.s0 = exact.interface(setup.start);
    TableProfile table;
    for (std::size_t i = 0; i <= setup.table_points; ++i) {
        const double x = init.s0 * static_cast<double>(i) / static_cast<double>(setup.table_points);
        table.x.push_back(x);
        table.offset.push_back(exact.offset(x, setup.start));
    }
    init.liquid = table;

    const double t0 = setup.start;
    FunctionInput<OnePhaseState> flux([&](double t) { return exact.boundary_flux(t + t0); });
    SimulationOptions opts;
    opts.horizon = setup.end - setup.start;
    opts.row_stride = opts.horizon / static_cast<double>(setup.rows);
    opts.reference = {1.0, setup.length};
    const auto res = simulate(init, dom, setup.material, flux, opts);
    if (!res.trajectory.completed()) throw NumericalError("oracle run aborted: " + res.trajectory.message);

    OracleResult out;
    out.grid_points = grid_points;
    out.steps = res.trajectory.monitor.steps;
    const double skip = setup.skip_fraction * opts.horizon;
    for (const auto& r : res.trajectory.rows) {
        if (r.t < skip) continue;
        const double se = exact.interface(r.t + t0);
        out.max_rel_error = std::max(out.max_rel_error, std::abs(r.s - se) / se);
    }
    return out;
}

struct OracleTable {
    std::vector<OracleResult> levels;
    std::vector<double> orders;  ///< orders[k] between levels k and k+1
    double finest_order{kNaN};
    bool monotone{true};

    bool pass(double min_order = 1.8) const { return monotone && finest_order >= min_order; }
};

/// Runs the oracle on each N (sorted ascending) and estimates the observed order.
inline OracleTable oracle_convergence(std::vector<std::size_t> grid_points, const OracleSetup& setup = {}) {
    std::sort(grid_points.begin(), grid_points.end());
    OracleTable t;
    for (std::size_t n : grid_points) t.levels.push_back(run_similarity_oracle(n, setup));
    for (std::size_t k = 0; k + 1 < t.levels.size(); ++k) {
        const double ratio = static_cast<double>(t.levels[k + 1].grid_points) /
                             static_cast<double>(t.levels[k].grid_points);
        t.orders.push_back(observed_order(t.levels[k].max_rel_error, t.levels[k + 1].max_rel_error, ratio));
        t.monotone = t.monotone && t.levels[k + 1].max_rel_error < t.levels[k].max_rel_error;
    }
    if (!t.orders.empty()) t.finest_order = t.orders.back();
    return t;
}

}  // namespace stefan::app
