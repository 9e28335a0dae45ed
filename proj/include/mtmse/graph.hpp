#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mtmse/model.hpp"

namespace mtmse {

/// Directed communication graph; every edge carries a positive integer delay.
struct CommGraph {
    struct Edge {
        int from;
        int to;
        int delay;
    };
    int n = 0;
    std::vector<Edge> edges;
};

struct Geodesics {
    Eigen::MatrixXi dist;  // dist(i, j) = delay-weighted distance i -> j, 0 on the diagonal
    int tau_star = 0;      // weighted diameter
};

/// All-pairs delay-weighted distances. Throws std::invalid_argument naming an
/// unreachable ordered pair when the graph is not strongly connected.
Geodesics geodesics(const CommGraph& graph);

/// One element of an agent's local information: measurement y_source(t - lag).
struct LocalEntry {
    int source;
    int lag;
    friend bool operator==(const LocalEntry&, const LocalEntry&) = default;
};

/// The common/local split induced by the graph. At time t every agent knows
/// y(1 : t - tau_star) (the common part); agent i additionally holds the
/// local entries (j, k), present iff dist(j, i) <= k < tau_star.
///
/// Canonical entry order: descending lag (oldest first), then ascending
/// source index. All covariance block layouts follow this order. Entries with
/// t - lag < 1 are dropped during warm-up, so block shapes vary for t < tau*.
struct InfoStructure {
    int n = 0;
    int tau_star = 0;
    Eigen::MatrixXi dist;
    std::vector<std::vector<LocalEntry>> local;  // per agent, full list (t >= tau*)

    /// Entries that exist at time t (lag <= t - 1), in canonical order.
    std::vector<LocalEntry> entries_at(int agent, int t) const;
};

/// Requires a strongly connected graph with tau_star >= 1 (n = 1, which has
/// an empty edge set and tau_star = 0, is rejected; use
/// centralized_info_structure for that case).
InfoStructure build_info_structure(const CommGraph& graph);

/// The tau* = 1 structure in which every agent's local information is its
/// own current measurement. Equals build_info_structure of a complete graph
/// with unit delays for n >= 2, and defines the single-agent (centralized
/// Kalman filtering) case for n = 1.
InfoStructure centralized_info_structure(int n);

/// Expresses each agent's local information as a linear function of the
/// delayed state plus recent process and measurement noise:
///   I_loc_i(t) = C_loc_i x(t - tau* + 1) + w_loc_i(t) + v_loc_i(t).
/// The row block of entry (j, k) is C_j A^(tau*-1-k); its w(t-m) coefficient
/// is C_j A^(m-k-1) for lags m in {k+1, ..., tau*-1}; its measurement noise
/// is v_j(t-k). Coefficients depend only on m - k, so the same descriptors
/// serve warm-up times with the valid lag range truncated.
struct LocalObservationModel {
    struct RowBlock {
        LocalEntry entry;
        Eigen::MatrixXd C;                     // steady-state row block
        std::vector<Eigen::MatrixXd> w_coeff;  // index m-k-1 -> coefficient of w(t-m)
    };
    int tau_star = 0;
    std::vector<std::vector<RowBlock>> blocks;    // per agent, canonical order
    std::vector<Eigen::MatrixXd> C_loc;           // stacked steady-state rows per agent
    std::vector<std::vector<Eigen::MatrixXd>> CA;  // CA[j][p] = C_j A^p, p < tau*

    int entry_rows(int agent, std::size_t idx) const {
        return static_cast<int>(blocks[agent][idx].C.rows());
    }
};

LocalObservationModel build_local_observation_model(const InfoStructure& info,
                                                    const LinearSystem& system);

/// Per-time view of the local stacks; during warm-up (t < tau*) the anchor
/// is x(1) and the row exponents shrink accordingly.
struct LocalBlocksAtTime {
    int t = 0;
    int t0 = 0;  // anchor time max(1, t - tau* + 1)
    std::vector<std::vector<LocalEntry>> entries;
    std::vector<Eigen::MatrixXd> C_loc;
    std::vector<int> local_dim;
};

LocalBlocksAtTime local_blocks_at(const LocalObservationModel& lom, int t);

}  // namespace mtmse
