#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mtmse/filter.hpp"
#include "mtmse/graph.hpp"
#include "mtmse/model.hpp"

namespace mtmse {

/// Counter-based normal generator keyed by (seed, path, time, source, index).
/// Streams are independent and order-insensitive, so Monte Carlo paths can be
/// evaluated in parallel with bitwise-reproducible results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    double normal(std::uint64_t path, std::uint64_t time, std::uint64_t source,
                  std::uint64_t index) const;

    Eigen::VectorXd normal_vector(std::uint64_t path, std::uint64_t time, std::uint64_t source,
                                  int dim) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// Draws correlated Gaussian vectors through a precomputed PSD square root.
struct GaussianVectorSampler {
    Eigen::MatrixXd factor;  // symmetric PSD square root of the covariance
    int source_id = 0;

    GaussianVectorSampler() = default;
    GaussianVectorSampler(const Eigen::MatrixXd& covariance, int source);

    Eigen::VectorXd draw(const CounterRng& rng, std::uint64_t path, std::uint64_t time) const;
};

/// Sequential estimation strategy: consumes the full stacked measurement
/// y(t) once per step (each implementation internally restricts itself to
/// the information its agents are entitled to) and emits all agents'
/// estimates stacked in agent order.
class Strategy {
public:
    virtual ~Strategy() = default;
    virtual std::string name() const = 0;
    virtual void reset() = 0;
    virtual Eigen::VectorXd step(int t, const Eigen::VectorXd& y) = 0;
    virtual std::unique_ptr<Strategy> clone() const = 0;
};

/// Team-optimal strategy driven by a precomputed gain schedule.
std::unique_ptr<Strategy> mtmse_strategy(const LinearSystem& system, const CostModel& cost,
                                         const InfoStructure& info,
                                         const LocalObservationModel& lom,
                                         const GainSchedule& schedule);

/// Per-agent conditional-mean strategy z_i = L_i E[x(t) | I_i(t)], realized
/// as z_i = L_i (x_com + Theta_hat_i Sigma_hat_ii^{-1} itilde_i).
std::unique_ptr<Strategy> mmse_strategy(const LinearSystem& system, const CostModel& cost,
                                        const InfoStructure& info,
                                        const LocalObservationModel& lom, int T);

/// Analytic horizon-T cost of the MMSE strategy under the coupled weights.
double mmse_cost(const LinearSystem& system, const CostModel& cost, const InfoStructure& info,
                 const LocalObservationModel& lom, int T);

struct ConsensusKfParams {
    int consensus_iterations = 1;
    /// Consensus step size as a fraction of 1/max in-degree; must land the
    /// effective step in (0, 1/max in-degree).
    double step_scale = 0.65;
};

/// Baseline in which each agent runs a Kalman filter on its own measurement
/// and averages neighbor estimates between prediction steps. Estimates
/// received over an edge with delay tau are propagated forward by A^tau; the
/// first averaging round uses those received values and any further rounds
/// exchange current iterates.
std::unique_ptr<Strategy> consensus_kf_strategy(const LinearSystem& system,
                                                const CostModel& cost, const CommGraph& graph,
                                                int T, const ConsensusKfParams& params = {});

struct SimulationResult {
    std::string strategy;
    int paths = 0;
    int horizon = 0;
    std::uint64_t seed = 0;
    double mean_total = 0.0;     // mean over paths of the horizon-summed cost
    double std_error = 0.0;      // sample std / sqrt(paths)
    double mean_per_step = 0.0;
    std::vector<double> per_path_total;  // in path order
};

struct MonteCarloOptions {
    bool keep_per_path = false;
    int threads = 0;  // 0 = hardware concurrency
};

/// Simulates the system for T steps on `paths` independent noise paths and
/// evaluates every strategy on identical realizations (common random
/// numbers). Results are bitwise reproducible for a given seed regardless of
/// the thread count.
std::vector<SimulationResult> monte_carlo(const LinearSystem& system, const CostModel& cost,
                                          const std::vector<const Strategy*>& strategies, int T,
                                          int paths, std::uint64_t seed,
                                          const MonteCarloOptions& options = {});

/// Agent i's information at time t split into the common part y(1 : t-tau*)
/// and the local part in canonical order. Exposed for tests and diagnostics.
struct InformationVector {
    Eigen::VectorXd common;
    Eigen::VectorXd local;
};
InformationVector information_vector(const InfoStructure& info, const LinearSystem& system,
                                     const std::vector<Eigen::VectorXd>& y, int t, int agent);

}  // namespace mtmse
