#include "mtmse/baselines.hpp"

#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "mtmse/linalg.hpp"

namespace mtmse {

namespace {

inline std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t path, std::uint64_t time,
                             std::uint64_t source, std::uint64_t index) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ path);
    h = splitmix(h ^ time);
    h = splitmix(h ^ source);
    h = splitmix(h ^ index);
    return h;
}

inline double to_unit(std::uint64_t bits) {
    // (0, 1]: keep the top 53 bits, shift away from zero for the log below.
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

}  // namespace

double CounterRng::normal(std::uint64_t path, std::uint64_t time, std::uint64_t source,
                          std::uint64_t index) const {
    const double u1 = to_unit(mix_key(seed_, path, time, source, 2 * index));
    const double u2 = to_unit(mix_key(seed_, path, time, source, 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd CounterRng::normal_vector(std::uint64_t path, std::uint64_t time,
                                          std::uint64_t source, int dim) const {
    Eigen::VectorXd z(dim);
    for (int k = 0; k < dim; ++k) z(k) = normal(path, time, source, k);
    return z;
}

GaussianVectorSampler::GaussianVectorSampler(const Eigen::MatrixXd& covariance, int source)
    : factor(linalg::psd_sqrt(covariance)), source_id(source) {}

Eigen::VectorXd GaussianVectorSampler::draw(const CounterRng& rng, std::uint64_t path,
                                            std::uint64_t time) const {
    return factor * rng.normal_vector(path, time, source_id, static_cast<int>(factor.cols()));
}

namespace {

// Gain-table strategy: z_i(t) = L_i x_com(t) + G_i(t) itilde_i(t). The MTMSE
// and MMSE strategies differ only in the table.
class InnovationGainStrategy final : public Strategy {
public:
    InnovationGainStrategy(std::string name, const LinearSystem& system, const CostModel& cost,
                           const InfoStructure& info, const LocalObservationModel& lom,
                           std::vector<Eigen::MatrixXd> kalman_gains,
                           std::vector<std::vector<Eigen::MatrixXd>> gain_table)
        : name_(std::move(name)), cost_L_(cost.L), total_dz_(cost.total_output_dim()),
          core_(system, info, lom, std::move(kalman_gains)), gains_(std::move(gain_table)) {}

    std::string name() const override { return name_; }
    void reset() override { core_.reset(); }

    Eigen::VectorXd step(int t, const Eigen::VectorXd& y) override {
        if (t > static_cast<int>(gains_.size()))
            throw std::runtime_error(name_ + ": gain schedule horizon exceeded");
        const OnlineFilter::View view = core_.step(t, y);
        Eigen::VectorXd z(total_dz_);
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < cost_L_.size(); ++i) {
            z.segment(r, cost_L_[i].rows()) =
                cost_L_[i] * view.x_com + gains_[t - 1][i] * view.innovation[i];
            r += cost_L_[i].rows();
        }
        return z;
    }

    std::unique_ptr<Strategy> clone() const override {
        return std::make_unique<InnovationGainStrategy>(*this);
    }

private:
    std::string name_;
    std::vector<Eigen::MatrixXd> cost_L_;
    int total_dz_;
    OnlineFilter core_;
    std::vector<std::vector<Eigen::MatrixXd>> gains_;
};

}  // namespace

std::unique_ptr<Strategy> mtmse_strategy(const LinearSystem& system, const CostModel& cost,
                                         const InfoStructure& info,
                                         const LocalObservationModel& lom,
                                         const GainSchedule& schedule) {
    return std::make_unique<InnovationGainStrategy>("mtmse", system, cost, info, lom,
                                                    schedule.kalman_gain, schedule.F);
}

namespace {

// Per-time MMSE gain tables L_i Theta_hat_i Sigma_hat_ii^{-1} plus the
// Kalman gains, computed once for a horizon.
struct MmsePrecompute {
    std::vector<Eigen::MatrixXd> kalman_gain;
    std::vector<std::vector<Eigen::MatrixXd>> gains;
    std::vector<double> step_cost;
};

MmsePrecompute mmse_precompute(const LinearSystem& system, const CostModel& cost,
                               const InfoStructure& info, const LocalObservationModel& lom,
                               int T) {
    const int n = info.n;
    MmsePrecompute pre;
    pre.kalman_gain.resize(T);
    pre.gains.resize(T);
    pre.step_cost.resize(T);

    std::vector<Eigen::MatrixXd> P(T + 1);
    const Eigen::MatrixXd C = system.stacked_C();
    const Eigen::MatrixXd R = system.stacked_R();
    P[1] = linalg::symmetrize(system.Sigma_x);
    for (int t = 1; t <= T; ++t) {
        Eigen::LLT<Eigen::MatrixXd> llt(linalg::symmetrize(C * P[t] * C.transpose() + R));
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("mmse_precompute: innovation covariance not PD");
        pre.kalman_gain[t - 1] = llt.solve(C * P[t]).transpose();
        if (t < T) {
            const Eigen::MatrixXd delta =
                Eigen::MatrixXd::Identity(P[t].rows(), P[t].cols()) - pre.kalman_gain[t - 1] * C;
            P[t + 1] = linalg::symmetrize(
                system.A * delta * P[t] * delta.transpose() * system.A.transpose() +
                system.A * pre.kalman_gain[t - 1] * R * pre.kalman_gain[t - 1].transpose() *
                    system.A.transpose() +
                system.Q);
        }
    }

    std::vector<std::vector<bool>> needed(n, std::vector<bool>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            needed[i][j] =
                (i == j) || !cost.coupling_is_zero(i, j) || !cost.coupling_is_zero(j, i);

    NoiseAggregates stationary;
    bool have_stationary = false;
    const Eigen::MatrixXd L = cost.assembled_L();
    const Eigen::MatrixXd S = cost.assembled_S();
    const Eigen::MatrixXd LSL = L.transpose() * S * L;
    for (int t = 1; t <= T; ++t) {
        const int t0 = std::max(1, t - info.tau_star + 1);
        NoiseAggregates scratch;
        const NoiseAggregates* noise;
        if (t >= info.tau_star) {
            if (!have_stationary) {
                stationary = noise_aggregate_covariances(info, lom, system, t);
                have_stationary = true;
            }
            noise = &stationary;
        } else {
            scratch = noise_aggregate_covariances(info, lom, system, t);
            noise = &scratch;
        }
        const CovarianceSet cov = innovation_covariances(*noise, P[t0], lom, system, t, &needed);
        pre.gains[t - 1].resize(n);
        std::vector<Eigen::MatrixXd> K(n);
        for (int i = 0; i < n; ++i) {
            Eigen::LLT<Eigen::MatrixXd> llt(linalg::symmetrize(cov.Sigma_hat[i][i]));
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("mmse strategy: singular local innovation covariance");
            K[i] = llt.solve(cov.Theta_hat[i].transpose()).transpose();
            pre.gains[t - 1][i] = cost.L[i] * K[i];
        }
        double step = (LSL * cov.P0).trace();
        for (int i = 0; i < n; ++i) {
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cost.output_dim(i), K[i].cols());
            for (int j = 0; j < n; ++j) {
                if (i != j && cost.coupling_is_zero(i, j)) continue;
                acc += cost.S[i][j] * cost.L[j] *
                       (K[j] * cov.Sigma_hat[j][i] - 2.0 * cov.Theta_hat[i]);
            }
            step += (K[i].transpose() * cost.L[i].transpose() * acc).trace();
        }
        pre.step_cost[t - 1] = step;
    }
    return pre;
}

}  // namespace

std::unique_ptr<Strategy> mmse_strategy(const LinearSystem& system, const CostModel& cost,
                                        const InfoStructure& info,
                                        const LocalObservationModel& lom, int T) {
    MmsePrecompute pre = mmse_precompute(system, cost, info, lom, T);
    return std::make_unique<InnovationGainStrategy>("mmse", system, cost, info, lom,
                                                    std::move(pre.kalman_gain),
                                                    std::move(pre.gains));
}

double mmse_cost(const LinearSystem& system, const CostModel& cost, const InfoStructure& info,
                 const LocalObservationModel& lom, int T) {
    const MmsePrecompute pre = mmse_precompute(system, cost, info, lom, T);
    double total = 0.0;
    for (double c : pre.step_cost) total += c;
    return total;
}

// ---------------------------------------------------------------------------
// Consensus Kalman filter baseline.
// ---------------------------------------------------------------------------

namespace {

class ConsensusKfStrategyImpl final : public Strategy {
public:
    ConsensusKfStrategyImpl(const LinearSystem& system, const CostModel& cost,
                            const CommGraph& graph, int T, const ConsensusKfParams& params)
        : system_(system), cost_L_(cost.L), total_dz_(cost.total_output_dim()), params_(params) {
        const int n = system.agent_count();
        in_neighbors_.resize(n);
        int max_in_degree = 0;
        for (const auto& e : graph.edges) {
            in_neighbors_[e.to].push_back({e.from, e.delay});
        }
        for (int i = 0; i < n; ++i)
            max_in_degree = std::max(max_in_degree, static_cast<int>(in_neighbors_[i].size()));
        if (params.consensus_iterations < 0)
            throw std::invalid_argument("consensus_kf: iterations >= 0");
        if (max_in_degree > 0) {
            if (params.step_scale <= 0.0 || params.step_scale >= 1.0)
                throw std::invalid_argument(
                    "consensus_kf: step size must land in (0, 1/max in-degree)");
            epsilon_ = params.step_scale / max_in_degree;
        } else {
            epsilon_ = 0.0;
        }

        max_delay_ = 1;
        for (const auto& e : graph.edges) max_delay_ = std::max(max_delay_, e.delay);
        A_pow_.resize(max_delay_ + 1);
        A_pow_[0] = Eigen::MatrixXd::Identity(system.state_dim(), system.state_dim());
        for (int p = 1; p <= max_delay_; ++p) A_pow_[p] = system.A * A_pow_[p - 1];

        // Per-agent filtered gains from the local Riccati recursions (offline,
        // identical across paths).
        filtered_gain_.assign(n, {});
        for (int i = 0; i < n; ++i) {
            Eigen::MatrixXd P = linalg::symmetrize(system.Sigma_x);
            filtered_gain_[i].resize(T);
            for (int t = 1; t <= T; ++t) {
                const Eigen::MatrixXd& Ci = system.C[i];
                Eigen::LLT<Eigen::MatrixXd> llt(
                    linalg::symmetrize(Ci * P * Ci.transpose() + system.R[i]));
                if (llt.info() != Eigen::Success)
                    throw std::runtime_error("consensus_kf: local innovation covariance not PD");
                const Eigen::MatrixXd K = llt.solve(Ci * P).transpose();
                filtered_gain_[i][t - 1] = K;
                const Eigen::MatrixXd Pf = P - K * Ci * P;
                P = linalg::symmetrize(system.A * Pf * system.A.transpose() + system.Q);
            }
        }
        reset();
    }

    std::string name() const override { return "ckf"; }

    void reset() override {
        const int n = static_cast<int>(cost_L_.size());
        predicted_.assign(n, Eigen::VectorXd::Zero(system_.state_dim()));
        history_.clear();
    }

    Eigen::VectorXd step(int t, const Eigen::VectorXd& y) override {
        const int n = static_cast<int>(cost_L_.size());
        std::vector<Eigen::VectorXd> state(n);
        Eigen::Index offset = 0;
        for (int i = 0; i < n; ++i) {
            const int dy = system_.measurement_dim(i);
            const Eigen::VectorXd yi = y.segment(offset, dy);
            offset += dy;
            state[i] = predicted_[i] + filtered_gain_[i][t - 1] *
                                           (yi - system_.C[i] * predicted_[i]);
        }

        for (int round = 0; round < params_.consensus_iterations; ++round) {
            std::vector<Eigen::VectorXd> next = state;
            for (int i = 0; i < n; ++i) {
                for (const auto& [j, delay] : in_neighbors_[i]) {
                    Eigen::VectorXd received;
                    if (round == 0) {
                        // Most recent value over the delayed link, propagated
                        // forward to the current time; zero prior before t=1.
                        const int src_t = t - delay;
                        received = (src_t >= 1 && src_t <= static_cast<int>(history_.size()))
                                       ? (A_pow_[delay] * history_[src_t - 1][j]).eval()
                                       : Eigen::VectorXd::Zero(system_.state_dim());
                    } else {
                        received = state[j];
                    }
                    next[i] += epsilon_ * (received - state[i]);
                }
            }
            state = std::move(next);
        }

        history_.push_back(state);
        Eigen::VectorXd z(total_dz_);
        Eigen::Index r = 0;
        for (int i = 0; i < n; ++i) {
            z.segment(r, cost_L_[i].rows()) = cost_L_[i] * state[i];
            r += cost_L_[i].rows();
        }
        for (int i = 0; i < n; ++i) predicted_[i] = system_.A * state[i];
        return z;
    }

    std::unique_ptr<Strategy> clone() const override {
        return std::make_unique<ConsensusKfStrategyImpl>(*this);
    }

private:
    LinearSystem system_;
    std::vector<Eigen::MatrixXd> cost_L_;
    int total_dz_;
    ConsensusKfParams params_;
    double epsilon_ = 0.0;
    int max_delay_ = 1;
    std::vector<std::vector<std::pair<int, int>>> in_neighbors_;  // (source, delay)
    std::vector<Eigen::MatrixXd> A_pow_;
    std::vector<std::vector<Eigen::MatrixXd>> filtered_gain_;  // [agent][t-1]
    std::vector<Eigen::VectorXd> predicted_;
    std::vector<std::vector<Eigen::VectorXd>> history_;  // post-consensus estimates per time
};

}  // namespace

std::unique_ptr<Strategy> consensus_kf_strategy(const LinearSystem& system,
                                                const CostModel& cost, const CommGraph& graph,
                                                int T, const ConsensusKfParams& params) {
    return std::make_unique<ConsensusKfStrategyImpl>(system, cost, graph, T, params);
}

// ---------------------------------------------------------------------------
// Monte Carlo harness.
// ---------------------------------------------------------------------------

namespace {
constexpr int kSourceInitial = 0;
constexpr int kSourceProcess = 1;
constexpr int kSourceMeasurementBase = 2;
}  // namespace

std::vector<SimulationResult> monte_carlo(const LinearSystem& system, const CostModel& cost,
                                          const std::vector<const Strategy*>& strategies, int T,
                                          int paths, std::uint64_t seed,
                                          const MonteCarloOptions& options) {
    if (paths < 1) throw std::invalid_argument("monte_carlo: paths >= 1");
    system.check_dimensions();
    cost.check_dimensions(system.state_dim());

    const int n = system.agent_count();
    const int n_strategies = static_cast<int>(strategies.size());
    const CounterRng rng(seed);
    const GaussianVectorSampler init(system.Sigma_x, kSourceInitial);
    const GaussianVectorSampler process(system.Q, kSourceProcess);
    std::vector<GaussianVectorSampler> meas;
    for (int i = 0; i < n; ++i) meas.emplace_back(system.R[i], kSourceMeasurementBase + i);

    const Eigen::MatrixXd L = cost.assembled_L();
    const Eigen::MatrixXd S = cost.assembled_S();

    std::vector<std::vector<double>> totals(n_strategies, std::vector<double>(paths, 0.0));

    auto run_range = [&](int begin, int end) {
        std::vector<std::unique_ptr<Strategy>> local;
        local.reserve(n_strategies);
        for (const Strategy* s : strategies) local.push_back(s->clone());
        for (int p = begin; p < end; ++p) {
            for (auto& s : local) s->reset();
            Eigen::VectorXd x = init.draw(rng, p, 0);
            std::vector<double> acc(n_strategies, 0.0);
            for (int t = 1; t <= T; ++t) {
                Eigen::VectorXd y(system.total_measurement_dim());
                Eigen::Index r = 0;
                for (int i = 0; i < n; ++i) {
                    y.segment(r, system.measurement_dim(i)) =
                        system.C[i] * x + meas[i].draw(rng, p, t);
                    r += system.measurement_dim(i);
                }
                const Eigen::VectorXd target = L * x;
                for (int s = 0; s < n_strategies; ++s) {
                    const Eigen::VectorXd e = target - local[s]->step(t, y);
                    acc[s] += e.dot(S * e);
                }
                if (t < T) x = system.A * x + process.draw(rng, p, t);
            }
            for (int s = 0; s < n_strategies; ++s) totals[s][p] = acc[s];
        }
    };

    int threads = options.threads > 0 ? options.threads
                                      : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, paths));
    if (threads == 1) {
        run_range(0, paths);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (paths + threads - 1) / threads;
        for (int k = 0; k < threads; ++k) {
            const int begin = k * chunk;
            const int end = std::min(paths, begin + chunk);
            if (begin < end) pool.emplace_back(run_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    std::vector<SimulationResult> results(n_strategies);
    for (int s = 0; s < n_strategies; ++s) {
        SimulationResult& out = results[s];
        out.strategy = strategies[s]->name();
        out.paths = paths;
        out.horizon = T;
        out.seed = seed;
        double sum = 0.0;
        for (double v : totals[s]) sum += v;  // fixed path order keeps the sum reproducible
        out.mean_total = sum / paths;
        double ss = 0.0;
        for (double v : totals[s]) ss += (v - out.mean_total) * (v - out.mean_total);
        out.std_error = paths > 1 ? std::sqrt(ss / (paths - 1)) / std::sqrt(double(paths)) : 0.0;
        out.mean_per_step = out.mean_total / T;
        if (options.keep_per_path) out.per_path_total = std::move(totals[s]);
    }
    return results;
}

InformationVector information_vector(const InfoStructure& info, const LinearSystem& system,
                                     const std::vector<Eigen::VectorXd>& y, int t, int agent) {
    if (t < 1 || t > static_cast<int>(y.size()))
        throw std::invalid_argument("information_vector: t out of range");
    InformationVector out;
    const int dy = system.total_measurement_dim();
    const int common_steps = std::max(0, t - info.tau_star);
    out.common.resize(common_steps * dy);
    for (int s = 1; s <= common_steps; ++s) out.common.segment((s - 1) * dy, dy) = y[s - 1];

    std::vector<int> agent_offset(info.n + 1, 0);
    for (int i = 0; i < info.n; ++i)
        agent_offset[i + 1] = agent_offset[i] + system.measurement_dim(i);
    std::vector<Eigen::VectorXd> parts;
    for (const auto& e : info.entries_at(agent, t))
        parts.push_back(y[t - e.lag - 1].segment(agent_offset[e.source],
                                                 system.measurement_dim(e.source)));
    out.local = linalg::vcat(parts);
    return out;
}

}  // namespace mtmse
