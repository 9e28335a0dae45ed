#include "mtmse/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mtmse/linalg.hpp"
#include "mtmse/static_estimator.hpp"

namespace mtmse {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw std::runtime_error("scenario: " + what + " must be a nested array");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols)
            throw std::runtime_error("scenario: ragged rows in " + what);
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

json matrix_list_to_json(const std::vector<Eigen::MatrixXd>& ms) {
    json out = json::array();
    for (const auto& m : ms) out.push_back(matrix_to_json(m));
    return out;
}

std::vector<Eigen::MatrixXd> matrix_list_from_json(const json& j, const std::string& what) {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(matrix_from_json(j[i], what + "[" + std::to_string(i) + "]"));
    return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

CostModel CostSpec::instantiate(int n) const {
    switch (kind) {
        case Kind::Average: return build_average_coupling_cost(n, agent_dim, lambda);
        case Kind::Chain: return build_chain_coupling_cost(n, agent_dim, lambda);
        case Kind::Explicit: return explicit_cost;
    }
    throw std::logic_error("CostSpec: bad kind");
}

CostSpec CostSpec::with_lambda(double new_lambda) const {
    if (kind == Kind::Explicit)
        throw std::invalid_argument("CostSpec: cannot sweep lambda of an explicit cost");
    CostSpec out = *this;
    out.lambda = new_lambda;
    return out;
}

InfoStructure Scenario::info_structure() const {
    if (system.agent_count() == 1) return centralized_info_structure(1);
    return build_info_structure(graph);
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["system"] = {{"A", matrix_to_json(s.system.A)},
                   {"C", matrix_list_to_json(s.system.C)},
                   {"Q", matrix_to_json(s.system.Q)},
                   {"R", matrix_list_to_json(s.system.R)},
                   {"Sigma_x", matrix_to_json(s.system.Sigma_x)}};
    switch (s.cost_spec.kind) {
        case CostSpec::Kind::Average:
            j["cost"] = {{"type", "average"}, {"lambda", s.cost_spec.lambda},
                         {"agent_dim", s.cost_spec.agent_dim}};
            break;
        case CostSpec::Kind::Chain:
            j["cost"] = {{"type", "chain"}, {"lambda", s.cost_spec.lambda},
                         {"agent_dim", s.cost_spec.agent_dim}};
            break;
        case CostSpec::Kind::Explicit: {
            json blocks = json::array();
            for (const auto& row : s.cost_spec.explicit_cost.S)
                blocks.push_back(matrix_list_to_json(row));
            j["cost"] = {{"type", "explicit"}, {"S", blocks},
                         {"L", matrix_list_to_json(s.cost_spec.explicit_cost.L)}};
            break;
        }
    }
    json edges = json::array();
    for (const auto& e : s.graph.edges) edges.push_back(json::array({e.from, e.to, e.delay}));
    j["graph"] = {{"n", s.graph.n}, {"edges", edges}};
    j["horizon"] = s.horizon;
    j["experiment"] = {{"paths", s.experiment.paths},
                       {"seed", s.experiment.seed},
                       {"strategies", s.experiment.strategies},
                       {"lambda_grid", s.experiment.lambda_grid},
                       {"consensus_iterations", s.experiment.consensus.consensus_iterations},
                       {"consensus_step_scale", s.experiment.consensus.step_scale}};
    return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
    json j = json::parse(text);  // throws json::parse_error with line info
    Scenario s;
    s.name = j.value("name", "scenario");
    const json& sys = j.at("system");
    s.system.A = matrix_from_json(sys.at("A"), "system.A");
    s.system.C = matrix_list_from_json(sys.at("C"), "system.C");
    s.system.Q = matrix_from_json(sys.at("Q"), "system.Q");
    s.system.R = matrix_list_from_json(sys.at("R"), "system.R");
    s.system.Sigma_x = matrix_from_json(sys.at("Sigma_x"), "system.Sigma_x");

    const json& cost = j.at("cost");
    const std::string type = cost.at("type").get<std::string>();
    if (type == "average" || type == "chain") {
        s.cost_spec.kind =
            type == "average" ? CostSpec::Kind::Average : CostSpec::Kind::Chain;
        s.cost_spec.lambda = cost.at("lambda").get<double>();
        s.cost_spec.agent_dim = cost.value("agent_dim", 1);
    } else if (type == "explicit") {
        s.cost_spec.kind = CostSpec::Kind::Explicit;
        const json& blocks = cost.at("S");
        for (std::size_t i = 0; i < blocks.size(); ++i)
            s.cost_spec.explicit_cost.S.push_back(
                matrix_list_from_json(blocks[i], "cost.S[" + std::to_string(i) + "]"));
        s.cost_spec.explicit_cost.L = matrix_list_from_json(cost.at("L"), "cost.L");
    } else {
        throw std::runtime_error("scenario: unknown cost type '" + type + "'");
    }

    const json& graph = j.at("graph");
    s.graph.n = graph.at("n").get<int>();
    for (const auto& e : graph.at("edges")) {
        if (!e.is_array() || e.size() != 3)
            throw std::runtime_error("scenario: graph edges must be [from, to, delay] triples");
        s.graph.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>()});
    }
    s.horizon = j.at("horizon").get<int>();

    if (j.contains("experiment")) {
        const json& e = j["experiment"];
        s.experiment.paths = e.value("paths", 1000);
        s.experiment.seed = e.value("seed", std::uint64_t{1});
        if (e.contains("strategies"))
            s.experiment.strategies = e["strategies"].get<std::vector<std::string>>();
        if (e.contains("lambda_grid"))
            s.experiment.lambda_grid = e["lambda_grid"].get<std::vector<double>>();
        s.experiment.consensus.consensus_iterations = e.value("consensus_iterations", 1);
        s.experiment.consensus.step_scale = e.value("consensus_step_scale", 0.65);
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path);
    out << scenario_to_json(scenario);
}

// ---------------------------------------------------------------------------
// Built-in scenarios.
// ---------------------------------------------------------------------------

Scenario make_two_agent_scenario(double sigma, double lambda) {
    Scenario s;
    s.name = "two-agent";
    s.system.A = Eigen::MatrixXd::Zero(1, 1);
    s.system.C = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    s.system.Q = Eigen::MatrixXd::Zero(1, 1);
    s.system.R = {sigma * sigma * Eigen::MatrixXd::Ones(1, 1),
                  sigma * sigma * Eigen::MatrixXd::Ones(1, 1)};
    s.system.Sigma_x = Eigen::MatrixXd::Ones(1, 1);
    // Both agents estimate the same scalar state; average-style coupling.
    s.cost_spec.kind = CostSpec::Kind::Explicit;
    s.cost_spec.explicit_cost.L = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    s.cost_spec.explicit_cost.S.assign(2, std::vector<Eigen::MatrixXd>(2));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            s.cost_spec.explicit_cost.S[i][j] =
                ((i == j ? 1.0 : 0.0) + lambda / 4.0) * Eigen::MatrixXd::Ones(1, 1);
    s.graph.n = 2;
    s.graph.edges = {{0, 1, 1}, {1, 0, 1}};
    s.horizon = 1;
    s.experiment.strategies = {"mtmse", "mmse"};
    return s;
}

Scenario make_uav_scenario(int n, double lambda) {
    Scenario s;
    s.name = "uav";
    s.system.A = Eigen::MatrixXd::Constant(n, n, 0.1);
    s.system.A.diagonal().setConstant(0.65);
    s.system.C.resize(n);
    s.system.C[0] = 2.0 * Eigen::MatrixXd::Ones(1, n);
    for (int i = 1; i < n; ++i) {
        s.system.C[i] = Eigen::MatrixXd::Zero(1, n);
        s.system.C[i](0, i) = 0.1;
    }
    s.system.Q = Eigen::MatrixXd::Identity(n, n);
    s.system.R.assign(n, 0.1 * Eigen::MatrixXd::Identity(1, 1));
    s.system.Sigma_x = Eigen::MatrixXd::Identity(n, n);
    s.cost_spec.kind = CostSpec::Kind::Average;
    s.cost_spec.lambda = lambda;
    s.cost_spec.agent_dim = 1;
    s.graph.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) s.graph.edges.push_back({i, j, 2});
    s.horizon = 100;
    s.experiment.lambda_grid = {0.1 * n * n, 1.0 * n * n, 10.0 * n * n};
    return s;
}

Scenario make_platoon_scenario(double lambda) {
    const int n = 4;
    Scenario s;
    s.name = "platoon";
    s.system.A.resize(n, n);
    s.system.A << 0.9, 0.0, 0.0, 0.0,
                  0.7, 0.9, 0.0, 0.0,
                  0.7, 0.7, 0.9, 0.0,
                  0.5, 0.7, 0.7, 0.9;
    s.system.C.assign(n, Eigen::MatrixXd::Identity(n, n));
    s.system.Q = Eigen::MatrixXd::Identity(n, n);
    s.system.R.assign(n, 0.1 * Eigen::MatrixXd::Identity(n, n));
    s.system.Sigma_x = Eigen::MatrixXd::Identity(n, n);
    s.cost_spec.kind = CostSpec::Kind::Chain;
    s.cost_spec.lambda = lambda;
    s.cost_spec.agent_dim = 1;
    s.graph.n = n;
    for (int i = 0; i + 1 < n; ++i) {
        s.graph.edges.push_back({i, i + 1, 1});
        s.graph.edges.push_back({i + 1, i, 1});
    }
    s.horizon = 100;
    s.experiment.lambda_grid = {0.1, 1.0, 10.0};
    return s;
}

Scenario make_scalar_steady_scenario() {
    Scenario s;
    s.name = "scalar-steady";
    s.system.A = Eigen::MatrixXd::Ones(1, 1);
    s.system.C = {Eigen::MatrixXd::Ones(1, 1)};
    s.system.Q = Eigen::MatrixXd::Ones(1, 1);
    s.system.R = {Eigen::MatrixXd::Ones(1, 1)};
    s.system.Sigma_x = Eigen::MatrixXd::Ones(1, 1);
    s.cost_spec.kind = CostSpec::Kind::Explicit;
    s.cost_spec.explicit_cost.L = {Eigen::MatrixXd::Ones(1, 1)};
    s.cost_spec.explicit_cost.S = {{Eigen::MatrixXd::Ones(1, 1)}};
    s.graph.n = 1;
    s.horizon = 2000;
    s.experiment.strategies = {"mtmse", "mmse"};
    return s;
}

// ---------------------------------------------------------------------------
// Gain files.
// ---------------------------------------------------------------------------

namespace {

json gain_payload(const GainFile& g) {
    json j;
    j["format"] = "mtmse-gains";
    j["version"] = 1;
    j["mode"] = g.mode;
    j["vec_convention"] = "column-stacking";
    j["entry_order"] = "lag-descending,source-ascending";
    j["n"] = g.n;
    j["d_x"] = g.d_x;
    j["horizon"] = g.horizon;
    j["tau_star"] = g.tau_star;
    j["K"] = matrix_list_to_json(g.kalman_gain);
    json F = json::array();
    for (const auto& per_t : g.F) F.push_back(matrix_list_to_json(per_t));
    j["F"] = F;
    if (g.mode == "steady") {
        j["steady"] = {{"P_bar", matrix_to_json(g.P_bar)},
                       {"K_bar", matrix_to_json(g.K_bar)},
                       {"F_bar", matrix_list_to_json(g.F_bar)},
                       {"J_star", g.J_star},
                       {"spectral_radius", g.spectral_radius},
                       {"riccati_iterations", g.iterations}};
    }
    return j;
}

}  // namespace

void write_gain_file(const GainFile& gains, const std::string& path) {
    json j = gain_payload(gains);
    j["checksum"] = hex64(fnv1a(j.dump()));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write gain file: " + path);
    out << j.dump(1) << "\n";
}

GainFile read_gain_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open gain file: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "mtmse-gains" || j.value("version", 0) != 1)
        throw std::runtime_error("gain file: unknown format or version");
    const std::string stored = j.at("checksum").get<std::string>();
    j.erase("checksum");
    if (hex64(fnv1a(j.dump())) != stored)
        throw std::runtime_error("gain file: checksum mismatch");

    GainFile g;
    g.mode = j.at("mode").get<std::string>();
    g.n = j.at("n").get<int>();
    g.d_x = j.at("d_x").get<int>();
    g.horizon = j.at("horizon").get<int>();
    g.tau_star = j.at("tau_star").get<int>();
    g.kalman_gain = matrix_list_from_json(j.at("K"), "K");
    for (const auto& per_t : j.at("F")) g.F.push_back(matrix_list_from_json(per_t, "F[t]"));
    if (j.contains("steady")) {
        const json& st = j["steady"];
        g.P_bar = matrix_from_json(st.at("P_bar"), "P_bar");
        g.K_bar = matrix_from_json(st.at("K_bar"), "K_bar");
        g.F_bar = matrix_list_from_json(st.at("F_bar"), "F_bar");
        g.J_star = st.at("J_star").get<double>();
        g.spectral_radius = st.at("spectral_radius").get<double>();
        g.iterations = st.at("riccati_iterations").get<int>();
    }
    return g;
}

GainSchedule schedule_from_gain_file(const GainFile& gains) {
    GainSchedule s;
    s.T = gains.horizon;
    s.tau_star = gains.tau_star;
    s.kalman_gain = gains.kalman_gain;
    s.F = gains.F;
    return s;
}

std::string csv_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

namespace {

// Static one-shot model induced at t = 1: no common measurement,
// y_i = C_i x + v_i with x ~ N(0, Sigma_x).
GaussianJointModel induced_static_model(const LinearSystem& sys) {
    const int n = sys.agent_count();
    GaussianJointModel joint;
    joint.d_x = sys.state_dim();
    joint.Theta.resize(n + 1);
    joint.Sigma.assign(n + 1, std::vector<Eigen::MatrixXd>(n + 1));
    joint.Theta[0].resize(sys.state_dim(), 0);
    joint.Sigma[0][0].resize(0, 0);
    for (int i = 0; i < n; ++i) {
        joint.Theta[i + 1] = sys.Sigma_x * sys.C[i].transpose();
        joint.Sigma[0][i + 1].resize(0, sys.measurement_dim(i));
        joint.Sigma[i + 1][0].resize(sys.measurement_dim(i), 0);
        for (int j = 0; j < n; ++j) {
            joint.Sigma[i + 1][j + 1] = sys.C[i] * sys.Sigma_x * sys.C[j].transpose();
            if (i == j) joint.Sigma[i + 1][j + 1] += sys.R[i];
        }
    }
    return joint;
}

int validation_exit(const ValidationReport& report, std::ostream& out) {
    for (const auto& c : report.checks) {
        out << c.name << ": " << (c.passed ? "PASS" : "FAIL")
            << " (diagnostic " << csv_number(c.diagnostic) << ")";
        if (!c.detail.empty()) out << " - " << c.detail;
        out << "\n";
    }
    out << "overall: " << (report.passed ? "PASS" : "FAIL") << "\n";
    return report.passed ? 0 : 1;
}

std::unique_ptr<Strategy> make_strategy(const std::string& name, const Scenario& sc,
                                        const InfoStructure& info,
                                        const LocalObservationModel& lom,
                                        const GainSchedule& schedule) {
    if (name == "mtmse") return mtmse_strategy(sc.system, sc.cost(), info, lom, schedule);
    if (name == "mmse") return mmse_strategy(sc.system, sc.cost(), info, lom, sc.horizon);
    if (name == "ckf")
        return consensus_kf_strategy(sc.system, sc.cost(), sc.graph, sc.horizon,
                                     sc.experiment.consensus);
    throw std::invalid_argument("unknown strategy '" + name + "'");
}

}  // namespace

int cmd_validate(const std::string& scenario_path, std::ostream& out) {
    const Scenario sc = load_scenario(scenario_path);
    const ValidationReport report = validate(sc.system, sc.cost());
    if (sc.system.agent_count() > 1) geodesics(sc.graph);  // strong connectivity
    return validation_exit(report, out);
}

int cmd_solve(const std::string& scenario_path, const std::string& mode,
              const std::string& output_prefix, std::ostream& out) {
    const Scenario sc = load_scenario(scenario_path);
    const CostModel cost = sc.cost();
    const ValidationReport report = validate(sc.system, cost);
    if (!report.passed) {
        out << "scenario fails validation; run the validate command for details\n";
        return 1;
    }
    const std::string gains_path = output_prefix + ".gains.json";
    const std::string csv_path = output_prefix + ".csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);

    GainFile gf;
    gf.n = sc.system.agent_count();
    gf.d_x = sc.system.state_dim();

    if (mode == "static") {
        const GaussianJointModel joint = induced_static_model(sc.system);
        const InnovationModel inn = innovation_model(joint);
        const TeamGains gains = solve_team_gains(inn, cost);
        const double J = optimal_static_cost(gains, cost, sc.system.Sigma_x);
        gf.mode = "static";
        gf.horizon = 1;
        gf.tau_star = 1;
        gf.F = {gains.F};
        write_gain_file(gf, gains_path);
        csv << "J_star\n" << csv_number(J) << "\n";
        out << "J_star = " << csv_number(J) << "\n";
    } else if (mode == "finite") {
        const InfoStructure info = sc.info_structure();
        const LocalObservationModel lom = build_local_observation_model(info, sc.system);
        const GainSchedule schedule =
            gain_schedule(sc.system, cost, info, lom, sc.horizon);
        gf.mode = "finite";
        gf.horizon = schedule.T;
        gf.tau_star = schedule.tau_star;
        gf.kalman_gain = schedule.kalman_gain;
        gf.F = schedule.F;
        write_gain_file(gf, gains_path);
        csv << "t,J_step,J_cumulative\n";
        double cumulative = 0.0;
        for (int t = 1; t <= schedule.T; ++t) {
            cumulative += schedule.step_cost[t - 1];
            csv << t << "," << csv_number(schedule.step_cost[t - 1]) << ","
                << csv_number(cumulative) << "\n";
        }
        out << "J_star_T = " << csv_number(optimal_cost_finite(schedule)) << "\n";
    } else if (mode == "steady") {
        const InfoStructure info = sc.info_structure();
        const LocalObservationModel lom = build_local_observation_model(info, sc.system);
        const SteadyState ss = steady_state(sc.system, cost, info, lom);
        gf.mode = "steady";
        gf.horizon = 0;
        gf.tau_star = info.tau_star;
        gf.P_bar = ss.P_bar;
        gf.K_bar = ss.K_bar;
        gf.F_bar = ss.F_bar;
        gf.J_star = ss.J_star;
        gf.spectral_radius = ss.spectral_radius;
        gf.iterations = ss.iterations;
        write_gain_file(gf, gains_path);
        csv << "J_star,spectral_radius,iterations\n"
            << csv_number(ss.J_star) << "," << csv_number(ss.spectral_radius) << ","
            << ss.iterations << "\n";
        out << "J_star = " << csv_number(ss.J_star)
            << " spectral_radius = " << csv_number(ss.spectral_radius)
            << " iterations = " << ss.iterations << "\n";
    } else {
        out << "unknown mode '" << mode << "' (expected static|finite|steady)\n";
        return 2;
    }
    out << "gains written to " << gains_path << ", summary to " << csv_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::vector<std::string>& strategies,
                 std::optional<int> paths, std::optional<std::uint64_t> seed,
                 const std::string& output_path, std::ostream& out) {
    const Scenario sc = load_scenario(scenario_path);
    const CostModel cost = sc.cost();
    const std::vector<std::string> wanted =
        strategies.empty() ? sc.experiment.strategies : strategies;
    for (const auto& name : wanted)
        if (name != "mtmse" && name != "mmse" && name != "ckf") {
            out << "unknown strategy '" << name << "'\n";
            return 2;
        }

    const InfoStructure info = sc.info_structure();
    const LocalObservationModel lom = build_local_observation_model(info, sc.system);
    const GainSchedule schedule = gain_schedule(sc.system, cost, info, lom, sc.horizon);

    std::vector<std::unique_ptr<Strategy>> owned;
    std::vector<const Strategy*> ptrs;
    for (const auto& name : wanted) {
        owned.push_back(make_strategy(name, sc, info, lom, schedule));
        ptrs.push_back(owned.back().get());
    }
    const int n_paths = paths.value_or(sc.experiment.paths);
    const std::uint64_t rng_seed = seed.value_or(sc.experiment.seed);
    const auto results = monte_carlo(sc.system, cost, ptrs, sc.horizon, n_paths, rng_seed);

    std::ofstream csv(output_path);
    if (!csv) throw std::runtime_error("cannot write " + output_path);
    csv << "strategy,empirical_mean,std_error,analytic,paths,seed\n";
    for (const auto& r : results) {
        std::string analytic;
        if (r.strategy == "mtmse") analytic = csv_number(optimal_cost_finite(schedule));
        if (r.strategy == "mmse")
            analytic = csv_number(mmse_cost(sc.system, cost, info, lom, sc.horizon));
        csv << r.strategy << "," << csv_number(r.mean_total) << "," << csv_number(r.std_error)
            << "," << analytic << "," << r.paths << "," << r.seed << "\n";
        out << r.strategy << ": " << csv_number(r.mean_total) << " +- "
            << csv_number(r.std_error) << (analytic.empty() ? "" : " (analytic " + analytic + ")")
            << "\n";
    }
    out << "results written to " << output_path << "\n";
    return 0;
}

namespace {

int reproduce_two_agent(const std::vector<double>& lambda_grid, const std::string& output_path,
                        std::ostream& out) {
    const std::vector<double> sigmas = {0.25, 0.5, 1.0, 2.0, 4.0};
    const std::vector<double> lambdas =
        lambda_grid.empty() ? std::vector<double>{0.0, 1.0, 4.0, 100.0, 1e6} : lambda_grid;
    std::ofstream csv(output_path);
    if (!csv) throw std::runtime_error("cannot write " + output_path);
    csv << "sigma,lambda,J_mmse,J_lin,improvement\n";
    for (double sigma : sigmas)
        for (double lambda : lambdas) {
            const Scenario sc = make_two_agent_scenario(sigma, lambda);
            const CostModel cost = sc.cost();
            const GaussianJointModel joint = induced_static_model(sc.system);
            const InnovationModel inn = innovation_model(joint);
            const TeamGains gains = solve_team_gains(inn, cost);
            const double j_lin = optimal_static_cost(gains, cost, sc.system.Sigma_x);
            // Per-agent MMSE strategy evaluated under the coupled cost.
            std::vector<Eigen::MatrixXd> mmse(2);
            for (int i = 0; i < 2; ++i) {
                Eigen::LLT<Eigen::MatrixXd> llt(inn.Sigma_hat[i][i]);
                mmse[i] = cost.L[i] * llt.solve(inn.Theta_hat[i].transpose()).transpose();
            }
            const double j_mmse = linear_strategy_cost(inn, cost, sc.system.Sigma_x, mmse);
            csv << csv_number(sigma) << "," << csv_number(lambda) << "," << csv_number(j_mmse)
                << "," << csv_number(j_lin) << "," << csv_number((j_mmse - j_lin) / j_lin)
                << "\n";
        }
    out << "two-agent sweep written to " << output_path << "\n";
    return 0;
}

int reproduce_filtering(const std::string& name, const std::vector<double>& lambda_grid,
                        const std::string& output_path, std::ostream& out) {
    const Scenario base = name == "uav" ? make_uav_scenario(4, 1.0) : make_platoon_scenario(1.0);
    const std::vector<double> lambdas =
        lambda_grid.empty() ? base.experiment.lambda_grid : lambda_grid;
    std::ofstream csv(output_path);
    if (!csv) throw std::runtime_error("cannot write " + output_path);
    csv << "lambda,J_mtmse,J_mmse,J_ckf,improvement_mmse,improvement_ckf\n";
    const InfoStructure info = base.info_structure();
    const LocalObservationModel lom = build_local_observation_model(info, base.system);
    for (double lambda : lambdas) {
        Scenario sc = base;
        sc.cost_spec = base.cost_spec.with_lambda(lambda);
        const CostModel cost = sc.cost();
        const GainSchedule schedule = gain_schedule(sc.system, cost, info, lom, sc.horizon);
        const double j_mtmse = optimal_cost_finite(schedule);
        const double j_mmse = mmse_cost(sc.system, cost, info, lom, sc.horizon);
        auto ckf = consensus_kf_strategy(sc.system, cost, sc.graph, sc.horizon,
                                         sc.experiment.consensus);
        const auto results = monte_carlo(sc.system, cost, {ckf.get()}, sc.horizon,
                                         sc.experiment.paths, sc.experiment.seed);
        const double j_ckf = results[0].mean_total;
        csv << csv_number(lambda) << "," << csv_number(j_mtmse) << "," << csv_number(j_mmse)
            << "," << csv_number(j_ckf) << "," << csv_number((j_mmse - j_mtmse) / j_mtmse)
            << "," << csv_number((j_ckf - j_mtmse) / j_mtmse) << "\n";
    }
    out << name << " sweep written to " << output_path << "\n";
    return 0;
}

}  // namespace

int cmd_reproduce(const std::string& name, const std::vector<double>& lambda_grid,
                  const std::string& output_path, std::ostream& out) {
    if (name == "two-agent") return reproduce_two_agent(lambda_grid, output_path, out);
    if (name == "uav" || name == "platoon")
        return reproduce_filtering(name, lambda_grid, output_path, out);
    out << "unknown reproduction '" << name << "' (expected two-agent|uav|platoon)\n";
    return 2;
}

}  // namespace mtmse
