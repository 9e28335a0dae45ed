#include "mtmse/model.hpp"

#include <stdexcept>

#include "mtmse/linalg.hpp"

namespace mtmse {

int LinearSystem::total_measurement_dim() const {
    int d = 0;
    for (const auto& c : C) d += static_cast<int>(c.rows());
    return d;
}

Eigen::MatrixXd LinearSystem::stacked_C() const { return linalg::vstack(C); }

Eigen::MatrixXd LinearSystem::stacked_R() const {
    const int dy = total_measurement_dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dy, dy);
    Eigen::Index r = 0;
    for (const auto& Ri : R) {
        out.block(r, r, Ri.rows(), Ri.cols()) = Ri;
        r += Ri.rows();
    }
    return out;
}

void LinearSystem::check_dimensions() const {
    const auto dx = A.rows();
    if (A.cols() != dx) throw std::invalid_argument("LinearSystem: A must be square");
    if (Q.rows() != dx || Q.cols() != dx)
        throw std::invalid_argument("LinearSystem: Q must be d_x x d_x");
    if (Sigma_x.rows() != dx || Sigma_x.cols() != dx)
        throw std::invalid_argument("LinearSystem: Sigma_x must be d_x x d_x");
    if (C.empty()) throw std::invalid_argument("LinearSystem: at least one agent required");
    if (C.size() != R.size())
        throw std::invalid_argument("LinearSystem: C and R agent counts differ");
    for (std::size_t i = 0; i < C.size(); ++i) {
        if (C[i].cols() != dx)
            throw std::invalid_argument("LinearSystem: C_" + std::to_string(i + 1) +
                                        " column count != d_x");
        if (R[i].rows() != C[i].rows() || R[i].cols() != C[i].rows())
            throw std::invalid_argument("LinearSystem: R_" + std::to_string(i + 1) +
                                        " shape does not match C_" + std::to_string(i + 1));
    }
}

int CostModel::total_output_dim() const {
    int d = 0;
    for (const auto& l : L) d += static_cast<int>(l.rows());
    return d;
}

Eigen::MatrixXd CostModel::assembled_S() const { return linalg::assemble_blocks(S); }

Eigen::MatrixXd CostModel::assembled_L() const { return linalg::vstack(L); }

void CostModel::check_dimensions(int state_dim) const {
    const std::size_t n = L.size();
    if (n == 0) throw std::invalid_argument("CostModel: empty");
    if (S.size() != n) throw std::invalid_argument("CostModel: S block table size != n");
    for (std::size_t i = 0; i < n; ++i) {
        if (L[i].cols() != state_dim)
            throw std::invalid_argument("CostModel: L_" + std::to_string(i + 1) +
                                        " column count != d_x");
        if (S[i].size() != n)
            throw std::invalid_argument("CostModel: S row " + std::to_string(i + 1) +
                                        " has wrong block count");
        for (std::size_t j = 0; j < n; ++j)
            if (S[i][j].rows() != L[i].rows() || S[i][j].cols() != L[j].rows())
                throw std::invalid_argument("CostModel: S_" + std::to_string(i + 1) +
                                            std::to_string(j + 1) + " has wrong shape");
    }
}

const AssumptionCheck& ValidationReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::invalid_argument("ValidationReport: unknown check " + name);
}

namespace {

// PBH rank margin at the unstable eigenvalues of A. `detect` selects the
// detectability form rows(A - lambda I; M) instead of [A - lambda I, M].
AssumptionCheck pbh_check(const std::string& name, const Eigen::MatrixXd& A,
                          const Eigen::MatrixXd& M, bool detect) {
    AssumptionCheck out{name, true, 1.0, ""};
    const Eigen::Index dx = A.rows();
    Eigen::VectorXcd eigs = A.eigenvalues();
    for (Eigen::Index k = 0; k < eigs.size(); ++k) {
        if (std::abs(eigs(k)) < 1.0) continue;  // only unstable modes matter in discrete time
        Eigen::MatrixXcd test;
        if (detect) {
            test.resize(dx + M.rows(), dx);
            test.topRows(dx) = A.cast<std::complex<double>>() -
                               eigs(k) * Eigen::MatrixXcd::Identity(dx, dx);
            test.bottomRows(M.rows()) = M.cast<std::complex<double>>();
        } else {
            test.resize(dx, dx + M.cols());
            test.leftCols(dx) = A.cast<std::complex<double>>() -
                                eigs(k) * Eigen::MatrixXcd::Identity(dx, dx);
            test.rightCols(M.cols()) = M.cast<std::complex<double>>();
        }
        const Eigen::Index r = linalg::rank_with_tolerance(test, Tolerances::rank);
        const double margin = static_cast<double>(r) - static_cast<double>(dx);
        if (margin < out.diagnostic) out.diagnostic = margin;
        if (r < dx) {
            out.passed = false;
            out.detail = "rank deficient at eigenvalue magnitude " +
                         std::to_string(std::abs(eigs(k)));
        }
    }
    return out;
}

}  // namespace

ValidationReport validate(const LinearSystem& system, const CostModel& cost) {
    system.check_dimensions();
    cost.check_dimensions(system.state_dim());
    if (cost.agent_count() != system.agent_count())
        throw std::invalid_argument("validate: cost and system agent counts differ");

    ValidationReport report;

    {
        AssumptionCheck a1{"A1", true, 0.0, "S positive definite"};
        const Eigen::MatrixXd S = cost.assembled_S();
        a1.diagnostic = linalg::min_eigenvalue(S);
        a1.passed = a1.diagnostic > Tolerances::pd && S.isApprox(S.transpose(), 1e-12);
        for (int i = 0; i < cost.agent_count() && a1.passed; ++i)
            for (int j = 0; j < cost.agent_count(); ++j)
                if (!cost.S[i][j].isApprox(cost.S[j][i].transpose(), 1e-12)) {
                    a1.passed = false;
                    a1.detail = "S blocks are not pairwise transposed";
                    break;
                }
        report.checks.push_back(a1);
    }
    {
        AssumptionCheck a2{"A2", true, 0.0, "R_i positive definite; Q, Sigma_x PSD"};
        double worst = 1e300;
        for (int i = 0; i < system.agent_count(); ++i) {
            const double e = linalg::min_eigenvalue(system.R[i]);
            worst = std::min(worst, e);
            if (e <= Tolerances::pd) {
                a2.passed = false;
                a2.detail = "R_" + std::to_string(i + 1) + " is not positive definite";
            }
        }
        if (linalg::min_eigenvalue(system.Q) < -Tolerances::psd) {
            a2.passed = false;
            a2.detail = "Q is not positive semidefinite";
        }
        if (linalg::min_eigenvalue(system.Sigma_x) < -Tolerances::psd) {
            a2.passed = false;
            a2.detail = "Sigma_x is not positive semidefinite";
        }
        a2.diagnostic = worst;
        report.checks.push_back(a2);
    }
    // A3 (independent primitive randomness) holds by construction of the
    // sampling model; recorded for completeness.
    report.checks.push_back({"A3", true, 0.0, "independent primitives (by construction)"});

    report.checks.push_back(
        pbh_check("A4", system.A, linalg::psd_sqrt(system.Q), /*detect=*/false));
    report.checks.push_back(pbh_check("A5", system.A, system.stacked_C(), /*detect=*/true));

    report.passed = true;
    for (const auto& c : report.checks) report.passed = report.passed && c.passed;
    return report;
}

CostModel build_average_coupling_cost(int n, int d, double lambda) {
    if (n < 1 || d < 1) throw std::invalid_argument("build_average_coupling_cost: n, d >= 1");
    if (lambda < 0.0) throw std::invalid_argument("build_average_coupling_cost: lambda >= 0");
    CostModel cost;
    cost.L.resize(n);
    cost.S.assign(n, std::vector<Eigen::MatrixXd>(n));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const double coupling = lambda / (static_cast<double>(n) * n);
    for (int i = 0; i < n; ++i) {
        cost.L[i] = Eigen::MatrixXd::Zero(d, n * d);
        cost.L[i].middleCols(i * d, d) = I;
        for (int j = 0; j < n; ++j) cost.S[i][j] = ((i == j ? 1.0 : 0.0) + coupling) * I;
    }
    return cost;
}

CostModel build_chain_coupling_cost(int n, int d, double lambda) {
    if (n < 2) throw std::invalid_argument("build_chain_coupling_cost: n >= 2 required");
    if (d < 1) throw std::invalid_argument("build_chain_coupling_cost: d >= 1");
    if (lambda < 0.0) throw std::invalid_argument("build_chain_coupling_cost: lambda >= 0");
    CostModel cost;
    cost.L.resize(n);
    cost.S.assign(n, std::vector<Eigen::MatrixXd>(n));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < n; ++i) {
        cost.L[i] = Eigen::MatrixXd::Zero(d, n * d);
        cost.L[i].middleCols(i * d, d) = I;
        const bool endpoint = (i == 0 || i == n - 1);
        for (int j = 0; j < n; ++j) {
            if (i == j)
                cost.S[i][j] = (1.0 + (endpoint ? 1.0 : 2.0) * lambda) * I;
            else if (std::abs(i - j) == 1)
                cost.S[i][j] = -lambda * I;
            else
                cost.S[i][j] = Eigen::MatrixXd::Zero(d, d);
        }
    }
    return cost;
}

}  // namespace mtmse
