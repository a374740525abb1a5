#include <chrono>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "geophase/acceptance.hpp"
#include "geophase/scenario.hpp"
#include "geophase/sweep.hpp"

namespace io = geophase::io;

namespace {

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Maps library exceptions onto the documented exit codes.
template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const io::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return io::exit_schema;
    } catch (const geophase::NotCyclicError& e) {
        std::cerr << "not cyclic: " << e.what() << "\n";
        return io::exit_not_cyclic;
    } catch (const io::TrustFailure& e) {
        std::cerr << "untrusted result: " << e.what() << "\n";
        return io::exit_untrusted;
    } catch (const geophase::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return io::exit_untrusted;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return io::exit_schema;
    } catch (const std::out_of_range& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return io::exit_schema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

void add_grid_flags(CLI::App* cmd, io::Overrides& o) {
    cmd->add_option("--dt", o.dt, "Oracle and trajectory time step (overrides grid.dt)");
    cmd->add_option("--periods", o.periods, "Trajectory horizon in cycles (overrides grid.periods)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Total, dynamic and geometric phases of spins in rotating and general magnetic fields"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    io::Overrides overrides;

    CLI::App* run = app.add_subcommand("run", "Run a scenario: report.json, trajectory.csv, phases.csv");
    run->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
    add_grid_flags(run, overrides);
    run->add_option("--tolerance", overrides.tolerance, "Accepted oracle residual (default 1e-5)");
    run->add_option("--out-dir", out_dir, "Output directory");

    CLI::App* traj = app.add_subcommand("trajectory", "Write trajectory.csv only");
    traj->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
    add_grid_flags(traj, overrides);
    traj->add_option("--out-dir", out_dir, "Output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "Find field settings with prescribed frequency ratios");
    sweep->add_option("config", config_path, "Sweep configuration (JSON)")->required();
    sweep->add_option("--out-dir", out_dir, "Output directory");

    CLI::App* validate = app.add_subcommand("validate", "Run the acceptance checks");
    validate->add_option("--seed", seed, "Seed for the randomized checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : io::exit_schema;
    }

    const auto start = std::chrono::steady_clock::now();

    if (run->parsed()) {
        return guarded([&] {
            io::Scenario sc = io::load_scenario(scenario_path);
            io::apply_overrides(sc, overrides);
            for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
            const io::RunArtifacts a = io::run_scenario(sc);
            io::write_outputs(out_dir, {{"report.json", a.report.dump(2) + "\n"},
                                        {"trajectory.csv", a.trajectory_csv},
                                        {"phases.csv", a.phases_csv}});
            const auto& ph = a.report.at("phases");
            std::printf("gamma = %.12f  delta = %.12f  beta = %.12f  fidelity = %.15f\n", ph.at("gamma").get<double>(),
                        ph.at("delta").get<double>(), ph.at("beta").get<double>(),
                        ph.at("cyclic_fidelity").get<double>());
            std::printf("oracle gamma residual %.3e, wall time %.2f s\n",
                        a.report.at("oracle").at("gamma_residual").get<double>(), elapsed(start));
            return io::exit_ok;
        });
    }
    if (traj->parsed()) {
        return guarded([&] {
            io::Scenario sc = io::load_scenario(scenario_path);
            io::apply_overrides(sc, overrides);
            for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
            io::write_outputs(out_dir, {{"trajectory.csv", io::trajectory_only(sc)}});
            std::printf("wall time %.2f s\n", elapsed(start));
            return io::exit_ok;
        });
    }
    if (sweep->parsed()) {
        return guarded([&] {
            const io::SweepConfig config = io::load_sweep_config(config_path);
            const auto points = io::sweep(config);
            io::write_outputs(out_dir, {{"sweep.csv", io::sweep_csv(points)}});
            std::printf("%zu point(s), wall time %.2f s\n", points.size(), elapsed(start));
            return io::exit_ok;
        });
    }
    // validate
    const auto results = geophase::acceptance::run_all(
        {seed}, [](const geophase::acceptance::CheckResult& r) {
            std::printf("%s\n", geophase::acceptance::format(r).c_str());
            std::fflush(stdout);
        });
    const bool ok = geophase::acceptance::all_passed(results);
    std::printf("%s, wall time %.2f s\n", ok ? "all checks passed" : "some checks failed", elapsed(start));
    return ok ? 0 : 1;
}
