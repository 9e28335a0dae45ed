// Independent reference implementations used to check the library: these
// deliberately avoid the solver code paths they validate.
#pragma once

#include <Eigen/Dense>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "mtmse/graph.hpp"
#include "mtmse/model.hpp"
#include "mtmse/static_estimator.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Information structure: literal simulation of the sharing recursion
//   I_i(t) = {y_i(1:t)} u (union over in-neighbors j of I_j(t - delay_ji)),
// with I_i(t) empty for t <= 0. Elements are (source, time) labels.
// ---------------------------------------------------------------------------
using InfoSet = std::set<std::pair<int, int>>;

inline std::vector<std::vector<InfoSet>> literal_information_sets(const mtmse::CommGraph& graph,
                                                                  int T) {
    const int n = graph.n;
    std::vector<std::vector<std::pair<int, int>>> in_nb(n);  // (source, delay)
    for (const auto& e : graph.edges) in_nb[e.to].push_back({e.from, e.delay});

    std::vector<std::vector<InfoSet>> I(n, std::vector<InfoSet>(T + 1));
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < n; ++i) {
            InfoSet s;
            for (int u = 1; u <= t; ++u) s.insert({i, u});
            for (const auto& [j, delay] : in_nb[i])
                if (t - delay >= 1) {
                    const InfoSet& prev = I[j][t - delay];
                    s.insert(prev.begin(), prev.end());
                }
            I[i][t] = std::move(s);
        }
    return I;
}

inline bool strongly_connected(int n, const std::vector<mtmse::CommGraph::Edge>& edges) {
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) reach[i][i] = true;
    for (const auto& e : edges) reach[e.from][e.to] = true;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!reach[i][j]) return false;
    return true;
}

inline mtmse::CommGraph random_strongly_connected_graph(std::mt19937_64& gen, int max_n = 8,
                                                        int max_delay = 3) {
    std::uniform_int_distribution<int> n_dist(2, max_n);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> delay(1, max_delay);
    while (true) {
        mtmse::CommGraph g;
        g.n = n_dist(gen);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                if (i != j && coin(gen) < 0.45) g.edges.push_back({i, j, delay(gen)});
        if (strongly_connected(g.n, g.edges)) return g;
    }
}

// ---------------------------------------------------------------------------
// Textbook Kalman filter, filtered form: returns E[x(t) | y(1:t)] per step.
// ---------------------------------------------------------------------------
inline std::vector<Eigen::VectorXd> textbook_kalman_filtered(
    const mtmse::LinearSystem& sys, const std::vector<Eigen::VectorXd>& ys) {
    const Eigen::MatrixXd C = sys.stacked_C();
    const Eigen::MatrixXd R = sys.stacked_R();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sys.state_dim(), sys.state_dim());
    Eigen::VectorXd x_pred = Eigen::VectorXd::Zero(sys.state_dim());
    Eigen::MatrixXd P_pred = sys.Sigma_x;
    std::vector<Eigen::VectorXd> out;
    for (const auto& y : ys) {
        const Eigen::MatrixXd innov_cov = C * P_pred * C.transpose() + R;
        const Eigen::MatrixXd K = P_pred * C.transpose() * innov_cov.inverse();
        const Eigen::VectorXd x_filt = x_pred + K * (y - C * x_pred);
        const Eigen::MatrixXd P_filt = (I - K * C) * P_pred;
        out.push_back(x_filt);
        x_pred = sys.A * x_filt;
        P_pred = sys.A * P_filt * sys.A.transpose() + sys.Q;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Static estimation oracle working directly on the raw joint covariance of
// (x, y_0, y_1, ..., y_n). Agent i applies W_i to u_i = (y_0; y_i).
// ---------------------------------------------------------------------------
struct StaticInstance {
    Eigen::MatrixXd Sigma_xx;
    mtmse::GaussianJointModel joint;
    mtmse::CostModel cost;
};

// cov(u_i, u_j) from the joint blocks.
inline Eigen::MatrixXd u_cov(const mtmse::GaussianJointModel& m, int i, int j) {
    const int d0 = m.measurement_dim(0);
    const int di = m.measurement_dim(i + 1);
    const int dj = m.measurement_dim(j + 1);
    Eigen::MatrixXd out(d0 + di, d0 + dj);
    out.topLeftCorner(d0, d0) = m.Sigma[0][0];
    out.topRightCorner(d0, dj) = m.Sigma[0][j + 1];
    out.bottomLeftCorner(di, d0) = m.Sigma[i + 1][0];
    out.bottomRightCorner(di, dj) = m.Sigma[i + 1][j + 1];
    return out;
}

inline Eigen::MatrixXd xu_cov(const mtmse::GaussianJointModel& m, int i) {
    const int d0 = m.measurement_dim(0);
    const int di = m.measurement_dim(i + 1);
    Eigen::MatrixXd out(m.d_x, d0 + di);
    out.leftCols(d0) = m.Theta[0];
    out.rightCols(di) = m.Theta[i + 1];
    return out;
}

// Team cost of measurement-space gains W, expanded from raw second moments.
inline double raw_strategy_cost(const StaticInstance& inst,
                                const std::vector<Eigen::MatrixXd>& W) {
    const int n = inst.joint.agent_count();
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Eigen::MatrixXd& Sij = inst.cost.S[i][j];
            const Eigen::MatrixXd Li = inst.cost.L[i];
            const Eigen::MatrixXd Lj = inst.cost.L[j];
            total += (Li.transpose() * Sij * Lj * inst.Sigma_xx).trace();
            total -= (Li.transpose() * Sij * W[j] * xu_cov(inst.joint, j).transpose()).trace();
            total -= (W[i].transpose() * Sij * Lj * xu_cov(inst.joint, i)).trace();
            total += (W[i].transpose() * Sij * W[j] * u_cov(inst.joint, j, i)).trace();
        }
    return total;
}

// Normal equations sum_j S_ij W_j cov(u_j, u_i) = sum_j S_ij L_j cov(x, u_i),
// assembled by direct differentiation of the expected cost and solved in the
// least-squares sense (the system is singular when agents share y_0).
inline double normal_equation_minimum(const StaticInstance& inst) {
    const int n = inst.joint.agent_count();
    std::vector<int> du(n), dz(n), off(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        du[i] = inst.joint.measurement_dim(0) + inst.joint.measurement_dim(i + 1);
        dz[i] = inst.cost.output_dim(i);
        off[i + 1] = off[i] + dz[i] * du[i];
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(off[n], off[n]);
    Eigen::VectorXd rhs(off[n]);
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dz[i], inst.joint.d_x);
        for (int j = 0; j < n; ++j) b += inst.cost.S[i][j] * inst.cost.L[j];
        b = b * xu_cov(inst.joint, i);
        rhs.segment(off[i], dz[i] * du[i]) = Eigen::Map<Eigen::VectorXd>(b.data(), b.size());
        for (int j = 0; j < n; ++j) {
            Eigen::MatrixXd kron(du[i] * dz[i], du[j] * dz[j]);
            const Eigen::MatrixXd uij = u_cov(inst.joint, i, j);  // = cov(u_j, u_i)^T
            for (Eigen::Index r = 0; r < uij.rows(); ++r)
                for (Eigen::Index c = 0; c < uij.cols(); ++c)
                    kron.block(r * dz[i], c * dz[j], dz[i], dz[j]) =
                        uij(r, c) * inst.cost.S[i][j];
            M.block(off[i], off[j], dz[i] * du[i], dz[j] * du[j]) = kron;
        }
    }
    Eigen::VectorXd w = M.completeOrthogonalDecomposition().solve(rhs);
    std::vector<Eigen::MatrixXd> W(n);
    for (int i = 0; i < n; ++i)
        W[i] = Eigen::Map<Eigen::MatrixXd>(w.segment(off[i], dz[i] * du[i]).data(), dz[i], du[i]);
    return raw_strategy_cost(inst, W);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int rows, int cols) {
    std::normal_distribution<double> d(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = d(gen);
    return m;
}

inline Eigen::MatrixXd random_pd(std::mt19937_64& gen, int dim, double ridge = 0.2) {
    const Eigen::MatrixXd g = random_matrix(gen, dim, dim);
    return g * g.transpose() + ridge * Eigen::MatrixXd::Identity(dim, dim);
}

// Random jointly Gaussian instance with random PD cost; roughly half the
// instances carry a common measurement.
inline StaticInstance random_static_instance(std::mt19937_64& gen, int max_n = 3,
                                             int max_dx = 3, int max_dy = 2) {
    std::uniform_int_distribution<int> n_dist(1, max_n), dx_dist(1, max_dx),
        dy_dist(1, max_dy), dz_dist(1, 2);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const int n = n_dist(gen);
    const int dx = dx_dist(gen);
    const bool common = coin(gen) < 0.5;
    const int d0 = common ? dy_dist(gen) : 0;
    std::vector<int> dims = {dx, d0};
    for (int i = 0; i < n; ++i) dims.push_back(dy_dist(gen));
    int total = 0;
    for (int d : dims) total += d;

    const Eigen::MatrixXd full = random_pd(gen, total, 0.3);  // cov of (x, y_0, ..., y_n)
    StaticInstance inst;
    inst.joint.d_x = dx;
    inst.Sigma_xx = full.topLeftCorner(dx, dx);
    std::vector<int> off(dims.size() + 1, 0);
    for (std::size_t k = 0; k < dims.size(); ++k) off[k + 1] = off[k] + dims[k];
    inst.joint.Theta.resize(n + 1);
    inst.joint.Sigma.assign(n + 1, std::vector<Eigen::MatrixXd>(n + 1));
    for (int i = 0; i <= n; ++i) {
        inst.joint.Theta[i] = full.block(0, off[i + 1], dx, dims[i + 1]);
        for (int j = 0; j <= n; ++j)
            inst.joint.Sigma[i][j] =
                full.block(off[i + 1], off[j + 1], dims[i + 1], dims[j + 1]);
    }

    inst.cost.L.resize(n);
    inst.cost.S.assign(n, std::vector<Eigen::MatrixXd>(n));
    std::vector<int> dz(n);
    int zdim = 0;
    for (int i = 0; i < n; ++i) {
        dz[i] = dz_dist(gen);
        zdim += dz[i];
        inst.cost.L[i] = random_matrix(gen, dz[i], dx);
    }
    const Eigen::MatrixXd S = random_pd(gen, zdim, 0.3);
    int r = 0;
    for (int i = 0; i < n; ++i) {
        int c = 0;
        for (int j = 0; j < n; ++j) {
            inst.cost.S[i][j] = S.block(r, c, dz[i], dz[j]);
            c += dz[j];
        }
        r += dz[i];
    }
    return inst;
}

}  // namespace oracles
