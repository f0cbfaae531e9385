#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stefan/app/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Sampled-data boundary control of the Stefan problem"};
    app.require_subcommand(1);

    std::string config, out_dir = ".", trajectory;
    unsigned workers = 1;
    std::optional<std::uint64_t> seed;
    bool two_phase = false;
    std::vector<std::size_t> grid{50, 100, 200, 400};

    auto* sim = app.add_subcommand("simulate", "run one configuration, write trajectory CSV and JSON summary");
    sim->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sim->add_option("--out-dir", out_dir, "output directory");
    sim->add_option("--seed", seed, "override the schedule seed");
    sim->add_flag("--two-phase", two_phase, "run the two-phase problem (needs solid_material)");

    auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over the c, R and s_r lists of the config");
    sweep->add_option("--config", config, "JSON run configuration with a sweep section")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--out-dir", out_dir, "output directory");
    sweep->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", seed, "override the schedule seed");
    sweep->add_flag("--two-phase", two_phase, "run the two-phase problem (needs solid_material)");

    auto* verify = app.add_subcommand("verify", "re-check a stored trajectory against its configuration");
    verify->add_option("--trajectory", trajectory, "trajectory CSV")->required()->check(CLI::ExistingFile);
    verify->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);

    auto* oracle = app.add_subcommand("oracle", "convergence study against the Neumann similarity solution");
    oracle->add_option("--grid", grid, "grid sizes N")->delimiter(',');
    auto* oracle_out = oracle->add_option("--out-dir", out_dir, "write oracle.csv here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : stefan::app::kConfigError;
    }

    stefan::app::Overrides overrides{seed, two_phase};
    if (*sim) return stefan::app::cmd_simulate(config, out_dir, overrides);
    if (*sweep) return stefan::app::cmd_sweep(config, out_dir, workers, overrides);
    if (*verify) return stefan::app::cmd_verify(trajectory, config);
    std::optional<std::filesystem::path> dir;
    if (oracle_out->count() > 0) dir = out_dir;
    return stefan::app::cmd_oracle(grid, dir);
}
