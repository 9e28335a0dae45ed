#pragma once

#include <Eigen/Dense>
#include <deque>
#include <vector>

#include "mtmse/graph.hpp"
#include "mtmse/model.hpp"
#include "mtmse/static_estimator.hpp"

namespace mtmse {

/// Delayed-state one-step prediction x_hat(t) = E[x(t) | y(1:t-1)] together
/// with its covariance and the gain used for the last update.
struct KalmanState {
    int t = 1;
    Eigen::VectorXd x_hat;
    Eigen::MatrixXd P;
    Eigen::MatrixXd K;
};

/// x_hat(1) = 0, P(1) = Sigma_x.
KalmanState kalman_init(const LinearSystem& system);

/// One predictor step driven by the stacked measurement y(t):
///   K(t) = P(t) C' [C P(t) C' + R]^{-1}
///   x_hat(t+1) = A x_hat(t) + A K(t) (y - C x_hat(t))
///   P(t+1) = A (I-KC) P (I-KC)' A' + A K R K' A' + Q, symmetrized.
KalmanState kalman_step(const KalmanState& state, const LinearSystem& system,
                        const Eigen::VectorXd& y);

/// Covariances of the recent-noise aggregates entering the local stacks at
/// time t. All four are constant for t >= tau*; earlier times truncate the
/// sums to the noise that exists.
struct NoiseAggregates {
    int t = 0;
    Eigen::MatrixXd Sigma_w;                        // var of the state's recent-noise part
    std::vector<Eigen::MatrixXd> P_sigma;           // cov(state noise part, w_loc_i)
    std::vector<std::vector<Eigen::MatrixXd>> P_w;  // cov(w_loc_i, w_loc_j)
    std::vector<std::vector<Eigen::MatrixXd>> P_v;  // cov(v_loc_i, v_loc_j)
};

NoiseAggregates noise_aggregate_covariances(const InfoStructure& info,
                                            const LocalObservationModel& lom,
                                            const LinearSystem& system, int t);

/// Second moments of the local innovations at one time step:
///   Sigma_hat_ij = C_loc_i P(t0) C_loc_j' + P_w_ij + P_v_ij
///   Theta_hat_i  = A^(t-t0) P(t0) C_loc_i' + P_sigma_i
///   P0           = A^(t-t0) P(t0) A^(t-t0)' + Sigma_w
/// where t0 = max(1, t - tau* + 1) and P is the delayed-state prediction
/// covariance. With a pair mask, off-diagonal Sigma_hat blocks that are
/// never read (zero cost coupling) are left empty.
struct CovarianceSet {
    int t = 0;
    LocalBlocksAtTime blocks;
    std::vector<std::vector<Eigen::MatrixXd>> Sigma_hat;
    std::vector<Eigen::MatrixXd> Theta_hat;
    Eigen::MatrixXd P0;
};

CovarianceSet innovation_covariances(const NoiseAggregates& noise,
                                     const Eigen::MatrixXd& P_delayed,
                                     const LocalObservationModel& lom,
                                     const LinearSystem& system, int t,
                                     const std::vector<std::vector<bool>>* pair_needed = nullptr);

/// Precomputed gains for one horizon: Kalman gains for the delayed-state
/// filter and per-time team gains, with the per-step optimal cost terms and
/// the worst stationarity residual encountered.
struct GainSchedule {
    int T = 0;
    int tau_star = 0;
    std::vector<Eigen::MatrixXd> kalman_gain;     // K(t), index t-1
    std::vector<std::vector<Eigen::MatrixXd>> F;  // F[t-1][i]
    std::vector<double> step_cost;                // optimal per-step cost terms
    std::vector<double> mmse_step_cost;           // per-step cost of the per-agent MMSE strategy
    double max_residual = 0.0;
};

/// Offline gain computation. Noise aggregates are stationary from t = tau*
/// onwards and are reused; with exploit_sparsity, innovation covariance
/// blocks for pairs with zero cost coupling are skipped (the result is
/// bitwise identical to the dense path).
GainSchedule gain_schedule(const LinearSystem& system, const CostModel& cost,
                           const InfoStructure& info, const LocalObservationModel& lom, int T,
                           bool exploit_sparsity = true);

/// Sum of the per-step optimal cost terms. Throws if any term is negative
/// beyond tolerance.
double optimal_cost_finite(const GainSchedule& schedule);

/// Sequential online engine: keeps the delayed-state estimate updated from
/// measurements as they become common, and exposes per step the common state
/// estimate and each agent's local innovation. One instance per stream; no
/// shared mutable state. The online work is matrix-vector products only.
class OnlineFilter {
public:
    OnlineFilter(const LinearSystem& system, const InfoStructure& info,
                 const LocalObservationModel& lom, std::vector<Eigen::MatrixXd> kalman_gains);

    void reset();

    struct View {
        Eigen::VectorXd x_com;                    // common estimate of x(t)
        std::vector<Eigen::VectorXd> innovation;  // local innovations, canonical order
    };

    /// Must be called with consecutive t = 1, 2, ... and the stacked y(t).
    View step(int t, const Eigen::VectorXd& y);

private:
    LinearSystem system_;
    int n_ = 0;
    int tau_star_ = 0;
    std::vector<Eigen::MatrixXd> kalman_gains_;
    Eigen::MatrixXd C_;
    std::vector<Eigen::MatrixXd> A_pow_;
    std::vector<int> agent_offset_;
    std::vector<LocalBlocksAtTime> views_;  // index min(t, tau*) - 1; steady beyond warm-up
    Eigen::VectorXd x_hat_;
    int anchor_ = 1;
    std::deque<Eigen::VectorXd> window_;
};

/// Sequential online filter over a measurement stream (stacked y(t) per t).
/// Maintains the delayed-state estimate, forms the common estimate and the
/// local innovations, and applies the scheduled gains. Returns z[t-1][i].
std::vector<std::vector<Eigen::VectorXd>> run_filter(const LinearSystem& system,
                                                     const CostModel& cost,
                                                     const InfoStructure& info,
                                                     const LocalObservationModel& lom,
                                                     const GainSchedule& schedule,
                                                     const std::vector<Eigen::VectorXd>& y);

/// Stationary solution: fixed point of the prediction Riccati recursion,
/// stationary innovation covariances, time-invariant team gains and the
/// per-step optimal cost of the infinite-horizon problem.
struct SteadyState {
    Eigen::MatrixXd P_bar;
    Eigen::MatrixXd K_bar;
    std::vector<Eigen::MatrixXd> F_bar;
    double J_star = 0.0;
    double spectral_radius = 0.0;  // of A - K_bar C
    int iterations = 0;
    double residual = 0.0;
    CovarianceSet stationary;
};

struct SteadyStateOptions {
    double rel_tol = 1e-12;
    int max_iterations = 100000;
};

SteadyState steady_state(const LinearSystem& system, const CostModel& cost,
                         const InfoStructure& info, const LocalObservationModel& lom,
                         const SteadyStateOptions& options = {});

/// Fixed-point iteration of the prediction Riccati recursion from P = start.
/// Returns the limit and the iteration count; throws on hitting the cap.
std::pair<Eigen::MatrixXd, int> riccati_fixed_point(const LinearSystem& system,
                                                    const Eigen::MatrixXd& start,
                                                    const SteadyStateOptions& options = {});

}  // namespace mtmse
