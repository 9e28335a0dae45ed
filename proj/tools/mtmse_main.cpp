#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtmse/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Minimum team mean-squared error estimation and filtering"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string mode = "finite";
    std::string output = "";
    std::vector<std::string> strategies;
    std::optional<int> paths;
    std::optional<std::uint64_t> seed;
    std::string repro_name;
    std::vector<double> lambda_grid;

    auto* validate = app.add_subcommand("validate", "Check model assumptions of a scenario");
    validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

    auto* solve = app.add_subcommand("solve", "Compute gains and optimal costs");
    solve->add_option("scenario", scenario_path, "scenario JSON file")->required();
    solve->add_option("--mode", mode, "static|finite|steady")->default_val("finite");
    solve->add_option("--out", output, "output prefix (default: scenario name + mode)");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo strategy comparison");
    simulate->add_option("scenario", scenario_path, "scenario JSON file")->required();
    simulate->add_option("--strategies", strategies, "subset of mtmse,mmse,ckf")->delimiter(',');
    int paths_arg = -1;
    std::int64_t seed_arg = -1;
    simulate->add_option("--paths", paths_arg, "number of Monte Carlo paths");
    simulate->add_option("--seed", seed_arg, "RNG seed");
    simulate->add_option("--out", output, "output CSV path");

    auto* reproduce = app.add_subcommand("reproduce", "Rebuild the reference experiments");
    reproduce->add_option("--name", repro_name, "two-agent|uav|platoon")->required();
    reproduce->add_option("--lambda-grid", lambda_grid, "coupling weights to sweep")
        ->delimiter(',');
    reproduce->add_option("--out", output, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems map to exit code 2
    }

    try {
        if (validate->parsed()) return mtmse::cmd_validate(scenario_path, std::cout);
        if (solve->parsed()) {
            if (output.empty()) output = scenario_path + "." + mode;
            return mtmse::cmd_solve(scenario_path, mode, output, std::cout);
        }
        if (simulate->parsed()) {
            if (paths_arg > 0) paths = paths_arg;
            if (seed_arg >= 0) seed = static_cast<std::uint64_t>(seed_arg);
            if (output.empty()) output = scenario_path + ".simulate.csv";
            return mtmse::cmd_simulate(scenario_path, strategies, paths, seed, output,
                                       std::cout);
        }
        if (reproduce->parsed()) {
            if (output.empty()) output = repro_name + ".reproduce.csv";
            return mtmse::cmd_reproduce(repro_name, lambda_grid, output, std::cout);
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
