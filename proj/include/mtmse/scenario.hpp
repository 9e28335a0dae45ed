#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mtmse/baselines.hpp"
#include "mtmse/filter.hpp"
#include "mtmse/graph.hpp"
#include "mtmse/model.hpp"

namespace mtmse {

/// Cost description as it appears in scenario files: either a builder
/// (average / chain coupling with a lambda) or explicit blocks. Builders are
/// kept symbolic so lambda sweeps can re-instantiate the cost.
struct CostSpec {
    enum class Kind { Average, Chain, Explicit };
    Kind kind = Kind::Explicit;
    double lambda = 0.0;
    int agent_dim = 1;          // per-agent block size for the builders
    CostModel explicit_cost;    // used when kind == Explicit

    CostModel instantiate(int n) const;
    CostSpec with_lambda(double new_lambda) const;
};

struct ExperimentOptions {
    int paths = 1000;
    std::uint64_t seed = 1;
    std::vector<std::string> strategies = {"mtmse", "mmse", "ckf"};
    std::vector<double> lambda_grid;
    ConsensusKfParams consensus;
};

/// One self-contained experiment: system, cost, communication graph, horizon
/// and simulation options. Matrices are stored row-major in the JSON file.
struct Scenario {
    std::string name;
    LinearSystem system;
    CostSpec cost_spec;
    CommGraph graph;
    int horizon = 1;
    ExperimentOptions experiment;

    CostModel cost() const { return cost_spec.instantiate(system.agent_count()); }
    /// Uses the graph for n >= 2; the single-agent case is centralized.
    InfoStructure info_structure() const;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

/// Built-in scenarios used by `reproduce` and the test suites.
Scenario make_two_agent_scenario(double sigma, double lambda);
Scenario make_uav_scenario(int n, double lambda);
Scenario make_platoon_scenario(double lambda);
Scenario make_scalar_steady_scenario();

/// Versioned gain container. The checksum covers the numeric payload; the
/// ordering convention strings document how F blocks map onto measurements.
struct GainFile {
    std::string mode;  // "static" | "finite" | "steady"
    int n = 0;
    int d_x = 0;
    int horizon = 0;
    int tau_star = 0;
    std::vector<Eigen::MatrixXd> kalman_gain;
    std::vector<std::vector<Eigen::MatrixXd>> F;

    // steady-state extras
    Eigen::MatrixXd P_bar;
    Eigen::MatrixXd K_bar;
    std::vector<Eigen::MatrixXd> F_bar;
    double J_star = 0.0;
    double spectral_radius = 0.0;
    int iterations = 0;
};

void write_gain_file(const GainFile& gains, const std::string& path);
/// Throws std::runtime_error on checksum or version mismatch.
GainFile read_gain_file(const std::string& path);

GainSchedule schedule_from_gain_file(const GainFile& gains);

/// One CSV cell with 17 significant digits, enough to round-trip a double.
std::string csv_number(double value);

// ---- command implementations (exit-code contract: 0 success, 1 failed
// validation or solver error, 2 parse/usage error) ----

int cmd_validate(const std::string& scenario_path, std::ostream& out);

int cmd_solve(const std::string& scenario_path, const std::string& mode,
              const std::string& output_prefix, std::ostream& out);

int cmd_simulate(const std::string& scenario_path, const std::vector<std::string>& strategies,
                 std::optional<int> paths, std::optional<std::uint64_t> seed,
                 const std::string& output_path, std::ostream& out);

int cmd_reproduce(const std::string& name, const std::vector<double>& lambda_grid,
                  const std::string& output_path, std::ostream& out);

}  // namespace mtmse
