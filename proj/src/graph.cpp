#include "mtmse/graph.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "mtmse/linalg.hpp"

namespace mtmse {

Geodesics geodesics(const CommGraph& graph) {
    const int n = graph.n;
    if (n < 1) throw std::invalid_argument("geodesics: empty graph");
    constexpr int unreachable = std::numeric_limits<int>::max() / 4;
    Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, unreachable);
    for (int i = 0; i < n; ++i) d(i, i) = 0;
    for (const auto& e : graph.edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
            throw std::invalid_argument("geodesics: edge endpoint out of range");
        if (e.delay < 1) throw std::invalid_argument("geodesics: delays must be >= 1");
        d(e.from, e.to) = std::min(d(e.from, e.to), e.delay);
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);

    Geodesics out;
    out.dist = d;
    out.tau_star = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (d(i, j) >= unreachable)
                throw std::invalid_argument("geodesics: graph is not strongly connected (no path " +
                                            std::to_string(i) + " -> " + std::to_string(j) + ")");
            out.tau_star = std::max(out.tau_star, d(i, j));
        }
    return out;
}

namespace {

InfoStructure info_from_distances(const Eigen::MatrixXi& dist, int tau_star) {
    InfoStructure info;
    info.n = static_cast<int>(dist.rows());
    info.tau_star = tau_star;
    info.dist = dist;
    info.local.resize(info.n);
    for (int i = 0; i < info.n; ++i)
        for (int k = tau_star - 1; k >= 0; --k)
            for (int j = 0; j < info.n; ++j)
                if (dist(j, i) <= k) info.local[i].push_back({j, k});
    return info;
}

}  // namespace

std::vector<LocalEntry> InfoStructure::entries_at(int agent, int t) const {
    std::vector<LocalEntry> out;
    for (const auto& e : local[agent])
        if (t - e.lag >= 1) out.push_back(e);
    return out;
}

InfoStructure build_info_structure(const CommGraph& graph) {
    const Geodesics geo = geodesics(graph);
    if (geo.tau_star < 1)
        throw std::invalid_argument(
            "build_info_structure: weighted diameter must be >= 1; the single-agent case is "
            "covered by centralized_info_structure");
    return info_from_distances(geo.dist, geo.tau_star);
}

InfoStructure centralized_info_structure(int n) {
    if (n < 1) throw std::invalid_argument("centralized_info_structure: n >= 1");
    Eigen::MatrixXi dist = Eigen::MatrixXi::Ones(n, n);
    dist.diagonal().setZero();
    return info_from_distances(dist, 1);
}

LocalObservationModel build_local_observation_model(const InfoStructure& info,
                                                    const LinearSystem& system) {
    system.check_dimensions();
    if (info.n != system.agent_count())
        throw std::invalid_argument(
            "build_local_observation_model: graph node count != system agent count");
    if (info.tau_star < 1)
        throw std::invalid_argument("build_local_observation_model: tau_star >= 1 required");

    LocalObservationModel lom;
    lom.tau_star = info.tau_star;

    lom.CA.resize(info.n);
    for (int j = 0; j < info.n; ++j) {
        lom.CA[j].resize(info.tau_star);
        lom.CA[j][0] = system.C[j];
        for (int p = 1; p < info.tau_star; ++p) lom.CA[j][p] = lom.CA[j][p - 1] * system.A;
    }

    lom.blocks.resize(info.n);
    lom.C_loc.resize(info.n);
    for (int i = 0; i < info.n; ++i) {
        std::vector<Eigen::MatrixXd> rows;
        for (const auto& entry : info.local[i]) {
            LocalObservationModel::RowBlock rb;
            rb.entry = entry;
            rb.C = lom.CA[entry.source][info.tau_star - 1 - entry.lag];
            for (int m = entry.lag + 1; m <= info.tau_star - 1; ++m)
                rb.w_coeff.push_back(lom.CA[entry.source][m - entry.lag - 1]);
            rows.push_back(rb.C);
            lom.blocks[i].push_back(std::move(rb));
        }
        lom.C_loc[i] = rows.empty() ? Eigen::MatrixXd(0, system.state_dim())
                                    : linalg::vstack(rows);
    }
    return lom;
}

LocalBlocksAtTime local_blocks_at(const LocalObservationModel& lom, int t) {
    if (t < 1) throw std::invalid_argument("local_blocks_at: t >= 1");
    const int n = static_cast<int>(lom.blocks.size());
    LocalBlocksAtTime out;
    out.t = t;
    out.t0 = std::max(1, t - lom.tau_star + 1);
    out.entries.resize(n);
    out.C_loc.resize(n);
    out.local_dim.resize(n);
    const int horizon = std::min(t, lom.tau_star);  // rows span x(t0..t)
    for (int i = 0; i < n; ++i) {
        std::vector<Eigen::MatrixXd> rows;
        for (const auto& rb : lom.blocks[i]) {
            if (t - rb.entry.lag < 1) continue;
            out.entries[i].push_back(rb.entry);
            rows.push_back(lom.CA[rb.entry.source][horizon - 1 - rb.entry.lag]);
        }
        out.C_loc[i] = rows.empty() ? Eigen::MatrixXd(0, lom.CA[0][0].cols())
                                    : linalg::vstack(rows);
        out.local_dim[i] = static_cast<int>(out.C_loc[i].rows());
    }
    return out;
}

}  // namespace mtmse
