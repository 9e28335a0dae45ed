#include "mtmse/static_estimator.hpp"

#include <stdexcept>
#include <string>

#include "mtmse/linalg.hpp"

namespace mtmse {

void GaussianJointModel::check_dimensions() const {
    const std::size_t m = Theta.size();
    if (m < 2) throw std::invalid_argument("GaussianJointModel: need at least one agent");
    if (Sigma.size() != m) throw std::invalid_argument("GaussianJointModel: Sigma table size");
    for (std::size_t i = 0; i < m; ++i) {
        if (Theta[i].rows() != d_x)
            throw std::invalid_argument("GaussianJointModel: Theta_" + std::to_string(i) +
                                        " row count != d_x");
        if (Sigma[i].size() != m)
            throw std::invalid_argument("GaussianJointModel: Sigma row size");
        for (std::size_t j = 0; j < m; ++j)
            if (Sigma[i][j].rows() != Theta[i].cols() || Sigma[i][j].cols() != Theta[j].cols())
                throw std::invalid_argument("GaussianJointModel: Sigma_" + std::to_string(i) +
                                            std::to_string(j) + " shape mismatch");
    }
}

InnovationModel innovation_model(const GaussianJointModel& joint) {
    joint.check_dimensions();
    const int n = joint.agent_count();
    InnovationModel inn;
    inn.d_x = joint.d_x;
    inn.common = joint.has_common();
    inn.Theta_hat.resize(n);
    inn.Sigma_hat.assign(n, std::vector<Eigen::MatrixXd>(n));
    inn.yhat_projection.resize(n);

    if (!inn.common) {
        inn.x0_projection.resize(joint.d_x, 0);
        for (int i = 0; i < n; ++i) {
            inn.Theta_hat[i] = joint.Theta[i + 1];
            inn.yhat_projection[i].resize(joint.Theta[i + 1].cols(), 0);
            for (int j = 0; j < n; ++j) inn.Sigma_hat[i][j] = joint.Sigma[i + 1][j + 1];
        }
        return inn;
    }

    const Eigen::MatrixXd& S00 = joint.Sigma[0][0];
    Eigen::LLT<Eigen::MatrixXd> llt(linalg::symmetrize(S00));
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("innovation_model: Sigma_00 is not positive definite");

    // Projections X Sigma_00^{-1} computed as (Sigma_00^{-1} X')'.
    inn.x0_projection = llt.solve(joint.Theta[0].transpose()).transpose();
    for (int i = 0; i < n; ++i)
        inn.yhat_projection[i] = llt.solve(joint.Sigma[0][i + 1]).transpose();

    for (int i = 0; i < n; ++i) {
        inn.Theta_hat[i] = joint.Theta[i + 1] - inn.x0_projection * joint.Sigma[0][i + 1];
        for (int j = 0; j < n; ++j)
            inn.Sigma_hat[i][j] =
                joint.Sigma[i + 1][j + 1] - inn.yhat_projection[i] * joint.Sigma[0][j + 1];
    }
    return inn;
}

TeamGains solve_gain_equation(const std::vector<std::vector<Eigen::MatrixXd>>& Sigma_hat,
                              const std::vector<Eigen::MatrixXd>& Theta_hat,
                              const CostModel& cost) {
    const int n = cost.agent_count();
    if (static_cast<int>(Sigma_hat.size()) != n || static_cast<int>(Theta_hat.size()) != n)
        throw std::invalid_argument("solve_gain_equation: block count mismatch");

    std::vector<int> dy(n), dz(n), offset(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        dy[i] = static_cast<int>(Sigma_hat[i][i].rows());
        dz[i] = cost.output_dim(i);
        offset[i + 1] = offset[i] + dz[i] * dy[i];
    }
    const int dim = offset[n];

    Eigen::MatrixXd Gamma = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd eta(dim);
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd SiL = Eigen::MatrixXd::Zero(dz[i], Theta_hat[i].rows());
        for (int j = 0; j < n; ++j) SiL += cost.S[i][j] * cost.L[j];
        eta.segment(offset[i], dz[i] * dy[i]) = linalg::vec(SiL * Theta_hat[i]);
        for (int j = 0; j < n; ++j) {
            if (cost.coupling_is_zero(i, j)) continue;  // block stays exactly zero
            Gamma.block(offset[i], offset[j], dz[i] * dy[i], dz[j] * dy[j]) =
                linalg::kron(Sigma_hat[i][j], cost.S[i][j]);
        }
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(Gamma);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("solve_gain_equation: gain system factorization failed (min "
                                 "eigenvalue approx " +
                                 std::to_string(linalg::min_eigenvalue(Gamma)) + ")");
    TeamGains gains;
    gains.eta = eta;
    gains.f = ldlt.solve(eta);
    gains.F.resize(n);
    for (int i = 0; i < n; ++i)
        gains.F[i] = linalg::unvec(gains.f.segment(offset[i], dz[i] * dy[i]), dz[i], dy[i]);

    // Stationarity residual of the block equations, relative to ||S|| ||Sigma_hat||.
    // Blocks with zero coupling never enter the equations and are excluded so
    // the masked and dense covariance paths give identical numbers.
    double s_norm = cost.assembled_S().norm();
    double sig_norm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i == j || !cost.coupling_is_zero(i, j)) sig_norm += Sigma_hat[i][j].squaredNorm();
    sig_norm = std::sqrt(sig_norm);
    const double scale = 1.0 + s_norm * sig_norm;

    double res = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd block = Eigen::MatrixXd::Zero(dz[i], dy[i]);
        for (int j = 0; j < n; ++j) {
            if (cost.coupling_is_zero(i, j)) continue;
            block += cost.S[i][j] * (gains.F[j] * Sigma_hat[j][i] - cost.L[j] * Theta_hat[i]);
        }
        res = std::max(res, block.norm());
    }
    gains.residual = res / scale;
    if (gains.residual > Tolerances::residual)
        throw std::runtime_error("solve_gain_equation: stationarity residual " +
                                 std::to_string(gains.residual) + " exceeds tolerance");
    return gains;
}

TeamGains solve_team_gains(const InnovationModel& inn, const CostModel& cost) {
    if (inn.agent_count() != cost.agent_count())
        throw std::invalid_argument("solve_team_gains: agent count mismatch");
    return solve_gain_equation(inn.Sigma_hat, inn.Theta_hat, cost);
}

std::vector<Eigen::VectorXd> mtmse_estimate(const InnovationModel& inn, const TeamGains& gains,
                                            const CostModel& cost, const Eigen::VectorXd& y0,
                                            const std::vector<Eigen::VectorXd>& y) {
    const int n = inn.agent_count();
    if (static_cast<int>(y.size()) != n)
        throw std::invalid_argument("mtmse_estimate: measurement count mismatch");
    if (y0.size() != inn.x0_projection.cols())
        throw std::invalid_argument("mtmse_estimate: common measurement dimension mismatch");

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(inn.d_x);
    if (inn.common) x0 = inn.x0_projection * y0;

    std::vector<Eigen::VectorXd> z(n);
    for (int i = 0; i < n; ++i) {
        if (y[i].size() != inn.Sigma_hat[i][i].rows())
            throw std::invalid_argument("mtmse_estimate: y_" + std::to_string(i + 1) +
                                        " dimension mismatch");
        Eigen::VectorXd innovation = y[i];
        if (inn.common) innovation -= inn.yhat_projection[i] * y0;
        z[i] = cost.L[i] * x0 + gains.F[i] * innovation;
    }
    return z;
}

namespace {

double cost_with_trace_term(const CostModel& cost, const Eigen::MatrixXd& P0, double correction) {
    const Eigen::MatrixXd L = cost.assembled_L();
    const Eigen::MatrixXd S = cost.assembled_S();
    const double base = (L.transpose() * S * L * P0).trace();
    double value = base + correction;
    const double tol = Tolerances::residual * (1.0 + std::abs(base));
    if (value < -tol)
        throw std::runtime_error("optimal cost is negative (" + std::to_string(value) +
                                 "); inconsistent inputs");
    return std::max(value, 0.0);
}

}  // namespace

double optimal_static_cost(const TeamGains& gains, const CostModel& cost,
                           const Eigen::MatrixXd& P0) {
    return cost_with_trace_term(cost, P0, -gains.eta.dot(gains.f));
}

double optimal_static_cost(const InnovationModel& inn, const CostModel& cost,
                           const Eigen::MatrixXd& P0) {
    return optimal_static_cost(solve_team_gains(inn, cost), cost, P0);
}

double linear_strategy_cost(const InnovationModel& inn, const CostModel& cost,
                            const Eigen::MatrixXd& P0, const std::vector<Eigen::MatrixXd>& G) {
    const int n = inn.agent_count();
    if (static_cast<int>(G.size()) != n)
        throw std::invalid_argument("linear_strategy_cost: gain count mismatch");
    double quad = 0.0, lin = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd SiL = Eigen::MatrixXd::Zero(cost.output_dim(i), inn.d_x);
        for (int j = 0; j < n; ++j) SiL += cost.S[i][j] * cost.L[j];
        lin += (G[i].transpose() * SiL * inn.Theta_hat[i]).trace();
        for (int j = 0; j < n; ++j)
            quad += (G[i].transpose() * cost.S[i][j] * G[j] * inn.Sigma_hat[j][i]).trace();
    }
    return cost_with_trace_term(cost, P0, quad - 2.0 * lin);
}

}  // namespace mtmse
