#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mtmse {

/// Numerical thresholds shared by the validation and solver layers.
/// Chosen for double precision at state dimensions up to a few hundred.
struct Tolerances {
    static constexpr double pd = 1e-10;        // strict positive definiteness
    static constexpr double psd = 1e-9;        // semidefiniteness slack
    static constexpr double rank = 1e-8;       // relative singular-value cutoff (PBH)
    static constexpr double residual = 1e-9;   // relative gain-equation residual
};

/// Discrete-time linear system x(t+1) = A x(t) + w(t) observed by n agents
/// through y_i(t) = C_i x(t) + v_i(t), with x(1) ~ N(0, Sigma_x),
/// w ~ N(0, Q) and v_i ~ N(0, R_i).
struct LinearSystem {
    Eigen::MatrixXd A;
    std::vector<Eigen::MatrixXd> C;
    Eigen::MatrixXd Q;
    std::vector<Eigen::MatrixXd> R;
    Eigen::MatrixXd Sigma_x;

    int agent_count() const { return static_cast<int>(C.size()); }
    int state_dim() const { return static_cast<int>(A.rows()); }
    int measurement_dim(int i) const { return static_cast<int>(C[i].rows()); }
    int total_measurement_dim() const;

    Eigen::MatrixXd stacked_C() const;
    Eigen::MatrixXd stacked_R() const;

    /// Throws std::invalid_argument on any dimension inconsistency.
    void check_dimensions() const;
};

/// Weighted quadratic team error (Lx - z)' S (Lx - z) with per-agent blocks.
/// S is the n×n block table, L the n-block stack of selectors L_i.
struct CostModel {
    std::vector<std::vector<Eigen::MatrixXd>> S;
    std::vector<Eigen::MatrixXd> L;

    int agent_count() const { return static_cast<int>(L.size()); }
    int output_dim(int i) const { return static_cast<int>(L[i].rows()); }
    int total_output_dim() const;
    bool coupling_is_zero(int i, int j) const { return S[i][j].isZero(0.0); }

    Eigen::MatrixXd assembled_S() const;
    Eigen::MatrixXd assembled_L() const;

    void check_dimensions(int state_dim) const;
};

struct AssumptionCheck {
    std::string name;
    bool passed = false;
    double diagnostic = 0.0;  // min eigenvalue or PBH rank margin, as applicable
    std::string detail;
};

struct ValidationReport {
    bool passed = false;
    std::vector<AssumptionCheck> checks;

    const AssumptionCheck& check(const std::string& name) const;
};

/// Checks the standing assumptions: S positive definite; each R_i positive
/// definite with Q and Sigma_x positive semidefinite; independent primitives
/// (holds by construction of the sampling model); (A, sqrt(Q)) stabilizable
/// and (A, C) detectable via PBH rank tests at the unstable eigenvalues of A.
ValidationReport validate(const LinearSystem& system, const CostModel& cost);

/// Cost penalizing per-agent error plus lambda × error of the estimate
/// average: S_ij = (delta_ij + lambda/n^2) I_d, L = identity.
CostModel build_average_coupling_cost(int n, int d, double lambda);

/// Cost for agents in a line penalizing per-agent error plus lambda × error
/// of adjacent differences: tridiagonal S with -lambda I off the diagonal.
CostModel build_chain_coupling_cost(int n, int d, double lambda);

}  // namespace mtmse
