#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mtmse/model.hpp"

namespace mtmse {

/// Second moments of jointly Gaussian zero-mean (x, y_0, y_1, ..., y_n).
/// Index 0 is the common measurement; a 0-column Theta[0] means no common
/// measurement. Theta[i] = cov(x, y_i), Sigma[i][j] = cov(y_i, y_j).
struct GaussianJointModel {
    int d_x = 0;
    std::vector<Eigen::MatrixXd> Theta;               // size n+1
    std::vector<std::vector<Eigen::MatrixXd>> Sigma;  // (n+1) x (n+1)

    int agent_count() const { return static_cast<int>(Theta.size()) - 1; }
    bool has_common() const { return Theta[0].cols() > 0; }
    int measurement_dim(int i) const { return static_cast<int>(Theta[i].cols()); }

    void check_dimensions() const;
};

/// Covariances of the innovations y_i - E[y_i | y_0], plus the projections
/// used to form E[x | y_0] and E[y_i | y_0] from y_0.
struct InnovationModel {
    int d_x = 0;
    std::vector<Eigen::MatrixXd> Theta_hat;               // cov(x, innovation_i)
    std::vector<std::vector<Eigen::MatrixXd>> Sigma_hat;  // innovation covariances
    Eigen::MatrixXd x0_projection;                        // Theta_0 Sigma_00^{-1}
    std::vector<Eigen::MatrixXd> yhat_projection;         // Sigma_i0 Sigma_00^{-1}
    bool common = false;

    int agent_count() const { return static_cast<int>(Theta_hat.size()); }
};

/// Team-optimal innovation gains and the vectorized system they solve.
struct TeamGains {
    std::vector<Eigen::MatrixXd> F;
    Eigen::VectorXd eta;      // stacked vec(sum_j S_ij L_j Theta_hat_i)
    Eigen::VectorXd f;        // stacked vec(F_1, ..., F_n)
    double residual = 0.0;    // relative stationarity residual
};

InnovationModel innovation_model(const GaussianJointModel& joint);

/// Solves the coupled stationarity equations
///   sum_j [ S_ij F_j Sigma_hat_ji - S_ij L_j Theta_hat_i ] = 0   for all i
/// via the Kronecker-vectorized system Gamma f = eta with
/// Gamma_ij = Sigma_hat_ij ⊗ S_ij (column-stacking convention). Blocks with
/// S_ij = 0 are zero in Gamma and are skipped. The solution's residual is
/// checked against Tolerances::residual.
TeamGains solve_gain_equation(const std::vector<std::vector<Eigen::MatrixXd>>& Sigma_hat,
                              const std::vector<Eigen::MatrixXd>& Theta_hat,
                              const CostModel& cost);

TeamGains solve_team_gains(const InnovationModel& inn, const CostModel& cost);

/// z_i = L_i E[x|y_0] + F_i (y_i - E[y_i|y_0]).
std::vector<Eigen::VectorXd> mtmse_estimate(const InnovationModel& inn, const TeamGains& gains,
                                            const CostModel& cost, const Eigen::VectorXd& y0,
                                            const std::vector<Eigen::VectorXd>& y);

/// Minimum team mean-squared error Tr(L' S L P_0) - eta' Gamma^{-1} eta, with
/// P_0 = var(x - E[x|y_0]). Throws if the result is negative beyond the
/// residual tolerance; values in (-tol, 0) are clamped to zero.
double optimal_static_cost(const InnovationModel& inn, const CostModel& cost,
                           const Eigen::MatrixXd& P0);
double optimal_static_cost(const TeamGains& gains, const CostModel& cost,
                           const Eigen::MatrixXd& P0);

/// Team cost of an arbitrary linear innovation strategy z_i = L_i x_hat_0 +
/// G_i (y_i - y_hat_i): Tr(L' S L P_0) - 2 g'eta + g'Gamma g.
double linear_strategy_cost(const InnovationModel& inn, const CostModel& cost,
                            const Eigen::MatrixXd& P0, const std::vector<Eigen::MatrixXd>& G);

}  // namespace mtmse
