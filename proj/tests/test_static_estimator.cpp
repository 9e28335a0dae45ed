#include <doctest.h>

#include <random>

#include "mtmse/linalg.hpp"
#include "mtmse/static_estimator.hpp"
#include "oracles.hpp"

using namespace mtmse;

namespace {

// Two agents observing a shared scalar through noise of variance sigma^2,
// coupled through the averaged-estimate penalty; no common measurement.
GaussianJointModel intro_joint(double sigma) {
    GaussianJointModel joint;
    joint.d_x = 1;
    joint.Theta.resize(3);
    joint.Sigma.assign(3, std::vector<Eigen::MatrixXd>(3));
    joint.Theta[0].resize(1, 0);
    joint.Sigma[0][0].resize(0, 0);
    for (int i = 1; i <= 2; ++i) {
        joint.Theta[i] = Eigen::MatrixXd::Ones(1, 1);
        joint.Sigma[0][i].resize(0, 1);
        joint.Sigma[i][0].resize(1, 0);
        for (int j = 1; j <= 2; ++j)
            joint.Sigma[i][j] =
                (1.0 + (i == j ? sigma * sigma : 0.0)) * Eigen::MatrixXd::Ones(1, 1);
    }
    return joint;
}

CostModel intro_cost(double lambda) {
    CostModel cost;
    cost.L = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    cost.S.assign(2, std::vector<Eigen::MatrixXd>(2));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            cost.S[i][j] = ((i == j ? 1.0 : 0.0) + lambda / 4.0) * Eigen::MatrixXd::Ones(1, 1);
    return cost;
}

// Expected team error of gains (F1, F2) for the intro setup, expanded by hand.
double intro_cost_of(double f1, double f2, double sigma, double lambda) {
    const double s2 = sigma * sigma;
    auto single = [&](double f) { return 1.0 - 2.0 * f + f * f * (1.0 + s2); };
    const double avg = 1.0 - (f1 + f2) + (f1 * f1 + f2 * f2) * (1.0 + s2) / 4.0 + f1 * f2 / 2.0;
    return single(f1) + single(f2) + lambda * avg;
}

}  // namespace

TEST_CASE("innovation model: intro example and degenerate common measurement") {
    SUBCASE("no common measurement leaves moments untouched") {
        const InnovationModel inn = innovation_model(intro_joint(1.7));
        CHECK(inn.Theta_hat[0](0, 0) == 1.0);
        CHECK(inn.Sigma_hat[0][0](0, 0) == doctest::Approx(1.0 + 1.7 * 1.7));
        CHECK(inn.Sigma_hat[0][1](0, 0) == 1.0);
        CHECK_FALSE(inn.common);
    }
    SUBCASE("a common measurement equal to the state zeroes Theta_hat") {
        GaussianJointModel joint = intro_joint(0.5);
        joint.Theta[0] = Eigen::MatrixXd::Ones(1, 1);
        joint.Sigma[0][0] = Eigen::MatrixXd::Ones(1, 1);
        for (int i = 1; i <= 2; ++i) {
            joint.Sigma[0][i] = Eigen::MatrixXd::Ones(1, 1);  // cov(x, y_i) = 1
            joint.Sigma[i][0] = Eigen::MatrixXd::Ones(1, 1);
        }
        const InnovationModel inn = innovation_model(joint);
        CHECK(inn.Theta_hat[0].norm() == doctest::Approx(0.0));
        CHECK(inn.Theta_hat[1].norm() == doctest::Approx(0.0));
    }
    SUBCASE("singular common covariance is reported") {
        GaussianJointModel joint = intro_joint(1.0);
        joint.Theta[0] = Eigen::MatrixXd::Ones(1, 1);
        joint.Sigma[0][0] = Eigen::MatrixXd::Zero(1, 1);
        joint.Sigma[0][1] = joint.Sigma[1][0] = joint.Sigma[0][2] = joint.Sigma[2][0] =
            Eigen::MatrixXd::Zero(1, 1);
        CHECK_THROWS_WITH_AS(innovation_model(joint), doctest::Contains("Sigma_00"),
                             std::runtime_error);
    }
}

TEST_CASE("innovation covariances equal the Schur complement of the common block") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const oracles::StaticInstance inst = oracles::random_static_instance(gen, 3, 2, 2);
        if (!inst.joint.has_common()) continue;
        const InnovationModel inn = innovation_model(inst.joint);
        const int n = inst.joint.agent_count();
        // Assemble cov(y_1..y_n) minus its projection onto y_0 and compare blockwise.
        const Eigen::MatrixXd S00inv = inst.joint.Sigma[0][0].inverse();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Eigen::MatrixXd schur =
                    inst.joint.Sigma[i + 1][j + 1] -
                    inst.joint.Sigma[i + 1][0] * S00inv * inst.joint.Sigma[0][j + 1];
                CHECK((inn.Sigma_hat[i][j] - schur).norm() <= 1e-10 * (1.0 + schur.norm()));
            }
    }
}

TEST_CASE("team gains: intro example solves [[4,1],[1,4]] F = (3,3)") {
    const InnovationModel inn = innovation_model(intro_joint(1.0));
    const CostModel cost = intro_cost(4.0);
    const TeamGains gains = solve_team_gains(inn, cost);
    CHECK(gains.F[0](0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(gains.F[1](0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(gains.eta(0) == doctest::Approx(3.0));
    CHECK(gains.eta(1) == doctest::Approx(3.0));
    CHECK(gains.residual <= Tolerances::residual);

    const double J = optimal_static_cost(gains, cost, Eigen::MatrixXd::Ones(1, 1));
    CHECK(J == doctest::Approx(2.4).epsilon(1e-12));
}

TEST_CASE("intro example agrees with grid minimization of the raw error") {
    const double sigma = 1.0, lambda = 4.0;
    const InnovationModel inn = innovation_model(intro_joint(sigma));
    const double J = optimal_static_cost(inn, intro_cost(lambda), Eigen::MatrixXd::Ones(1, 1));
    double best = 1e300, best_f = -1.0;
    for (int k = 0; k <= 2000; ++k) {
        const double f = k / 2000.0;
        const double val = intro_cost_of(f, f, sigma, lambda);  // symmetric optimum
        if (val < best) {
            best = val;
            best_f = f;
        }
    }
    CHECK(std::abs(best - J) < 1e-5);
    CHECK(std::abs(best_f - 0.6) < 1e-3);
}

TEST_CASE("block-diagonal cost reduces to per-agent conditional-mean gains") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        oracles::StaticInstance inst = oracles::random_static_instance(gen);
        const int n = inst.joint.agent_count();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) inst.cost.S[i][j].setZero();
        const InnovationModel inn = innovation_model(inst.joint);
        const TeamGains gains = solve_team_gains(inn, inst.cost);
        for (int i = 0; i < n; ++i) {
            const Eigen::MatrixXd expect =
                inst.cost.L[i] * inn.Theta_hat[i] * inn.Sigma_hat[i][i].inverse();
            CHECK((gains.F[i] - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
        }
    }
}

TEST_CASE("single agent: weight block cancels out of the gain") {
    std::mt19937_64 gen(13);
    oracles::StaticInstance inst;
    do {
        inst = oracles::random_static_instance(gen, 1);
    } while (inst.joint.agent_count() != 1);
    inst.cost.S[0][0] = oracles::random_pd(gen, inst.cost.output_dim(0));
    const InnovationModel inn = innovation_model(inst.joint);
    const TeamGains gains = solve_team_gains(inn, inst.cost);
    const Eigen::MatrixXd expect =
        inst.cost.L[0] * inn.Theta_hat[0] * inn.Sigma_hat[0][0].inverse();
    CHECK((gains.F[0] - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
}

TEST_CASE("estimates: linear in measurements, exact under a revealing common signal") {
    const InnovationModel inn = innovation_model(intro_joint(1.0));
    const CostModel cost = intro_cost(4.0);
    const TeamGains gains = solve_team_gains(inn, cost);
    const Eigen::VectorXd empty(0);

    SUBCASE("zero measurements give zero estimates") {
        const auto z = mtmse_estimate(inn, gains, cost, empty,
                                      {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)});
        CHECK(z[0].norm() == 0.0);
        CHECK(z[1].norm() == 0.0);
    }
    SUBCASE("unit measurement is scaled by the gain") {
        const auto z = mtmse_estimate(inn, gains, cost, empty,
                                      {Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)});
        CHECK(z[0](0) == doctest::Approx(0.6).epsilon(1e-12));
    }
    SUBCASE("dimension mismatch throws") {
        CHECK_THROWS_AS(
            mtmse_estimate(inn, gains, cost, empty, {Eigen::VectorXd::Zero(2)}),
            std::invalid_argument);
    }
    SUBCASE("common measurement revealing the state dominates") {
        GaussianJointModel joint = intro_joint(1.0);
        joint.Theta[0] = Eigen::MatrixXd::Ones(1, 1);
        joint.Sigma[0][0] = Eigen::MatrixXd::Ones(1, 1);
        for (int i = 1; i <= 2; ++i) {
            joint.Sigma[0][i] = Eigen::MatrixXd::Ones(1, 1);
            joint.Sigma[i][0] = Eigen::MatrixXd::Ones(1, 1);
        }
        const InnovationModel rev = innovation_model(joint);
        const TeamGains g2 = solve_team_gains(rev, cost);
        Eigen::VectorXd x(1);
        x << 0.37;
        const auto z = mtmse_estimate(rev, g2, cost, x, {Eigen::VectorXd::Ones(1), x});
        CHECK(z[0](0) == doctest::Approx(0.37));
        CHECK(z[1](0) == doctest::Approx(0.37));
    }
}

TEST_CASE("optimal cost: uncoupled closed form and zero-information edge cases") {
    SUBCASE("lambda = 0 gives twice the scalar conditional-mean error") {
        for (double sigma : {0.25, 0.5, 1.0, 2.0}) {
            const InnovationModel inn = innovation_model(intro_joint(sigma));
            const double J =
                optimal_static_cost(inn, intro_cost(0.0), Eigen::MatrixXd::Ones(1, 1));
            const double s2 = sigma * sigma;
            CHECK(J == doctest::Approx(2.0 * s2 / (1.0 + s2)).epsilon(1e-12));
        }
    }
    SUBCASE("zero Theta_hat reduces to the trace term") {
        GaussianJointModel joint = intro_joint(1.0);
        joint.Theta[1].setZero();
        joint.Theta[2].setZero();
        const CostModel cost = intro_cost(4.0);
        const InnovationModel inn = innovation_model(joint);
        const Eigen::MatrixXd P0 = 0.8 * Eigen::MatrixXd::Ones(1, 1);
        const Eigen::MatrixXd L = cost.assembled_L();
        const double expect = (L.transpose() * cost.assembled_S() * L * P0).trace();
        CHECK(optimal_static_cost(inn, cost, P0) == doctest::Approx(expect));
    }
}

TEST_CASE("solved gains beat random strategies and match the normal-equation oracle") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> noise(0.0, 1.0);
    int instances = 0;
    while (instances < 50) {
        const oracles::StaticInstance inst = oracles::random_static_instance(gen);
        const InnovationModel inn = innovation_model(inst.joint);
        const Eigen::MatrixXd P0 =
            inst.joint.has_common()
                ? (inst.Sigma_xx - inst.joint.Theta[0] * inst.joint.Sigma[0][0].inverse() *
                                       inst.joint.Theta[0].transpose())
                      .eval()
                : inst.Sigma_xx;
        const TeamGains gains = solve_team_gains(inn, inst.cost);
        const double J = optimal_static_cost(gains, inst.cost, P0);
        ++instances;

        // Against the independent least-squares oracle on raw covariances.
        const double J_oracle = oracles::normal_equation_minimum(inst);
        CHECK(std::abs(J - J_oracle) <= 1e-6 * (1.0 + std::abs(J_oracle)));

        // Against 1000 random measurement-space strategies.
        const int n = inst.joint.agent_count();
        double best_random = 1e300;
        for (int k = 0; k < 1000; ++k) {
            std::vector<Eigen::MatrixXd> W(n);
            for (int i = 0; i < n; ++i) {
                const int du =
                    inst.joint.measurement_dim(0) + inst.joint.measurement_dim(i + 1);
                W[i] = oracles::random_matrix(gen, inst.cost.output_dim(i), du);
            }
            best_random = std::min(best_random, oracles::raw_strategy_cost(inst, W));
        }
        CHECK(J <= best_random + 1e-8);
    }
}

TEST_CASE("per-agent conditional-mean strategy never beats the team optimum") {
    std::mt19937_64 gen(19);
    for (int trial = 0; trial < 30; ++trial) {
        oracles::StaticInstance inst = oracles::random_static_instance(gen);
        const int n = inst.joint.agent_count();
        const bool block_diag = trial % 3 == 0;
        if (block_diag)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) inst.cost.S[i][j].setZero();
        const InnovationModel inn = innovation_model(inst.joint);
        const Eigen::MatrixXd P0 =
            inst.joint.has_common()
                ? (inst.Sigma_xx - inst.joint.Theta[0] * inst.joint.Sigma[0][0].inverse() *
                                       inst.joint.Theta[0].transpose())
                      .eval()
                : inst.Sigma_xx;
        const double J = optimal_static_cost(inn, inst.cost, P0);
        std::vector<Eigen::MatrixXd> mmse(n);
        for (int i = 0; i < n; ++i)
            mmse[i] = inst.cost.L[i] * inn.Theta_hat[i] * inn.Sigma_hat[i][i].inverse();
        const double J_mmse = linear_strategy_cost(inn, inst.cost, P0, mmse);
        CHECK(J <= J_mmse + 1e-9);
        if (block_diag) CHECK(std::abs(J - J_mmse) <= 1e-9 * (1.0 + J));
    }
}

TEST_CASE("relabeling agents permutes the gain blocks") {
    std::mt19937_64 gen(23);
    oracles::StaticInstance inst;
    do {
        inst = oracles::random_static_instance(gen, 3);
    } while (inst.joint.agent_count() != 3);
    const std::vector<int> perm = {2, 0, 1};

    const TeamGains base = solve_team_gains(innovation_model(inst.joint), inst.cost);

    oracles::StaticInstance shuffled = inst;
    for (int i = 0; i < 3; ++i) {
        shuffled.joint.Theta[i + 1] = inst.joint.Theta[perm[i] + 1];
        shuffled.cost.L[i] = inst.cost.L[perm[i]];
        shuffled.joint.Sigma[0][i + 1] = inst.joint.Sigma[0][perm[i] + 1];
        shuffled.joint.Sigma[i + 1][0] = inst.joint.Sigma[perm[i] + 1][0];
        for (int j = 0; j < 3; ++j) {
            shuffled.joint.Sigma[i + 1][j + 1] = inst.joint.Sigma[perm[i] + 1][perm[j] + 1];
            shuffled.cost.S[i][j] = inst.cost.S[perm[i]][perm[j]];
        }
    }
    const TeamGains moved = solve_team_gains(innovation_model(shuffled.joint), shuffled.cost);
    for (int i = 0; i < 3; ++i)
        CHECK((moved.F[i] - base.F[perm[i]]).norm() <= 1e-9 * (1.0 + base.F[perm[i]].norm()));
}

TEST_CASE("stationarity residual stays within tolerance on random instances") {
    std::mt19937_64 gen(29);
    for (int trial = 0; trial < 25; ++trial) {
        const oracles::StaticInstance inst = oracles::random_static_instance(gen);
        const TeamGains gains = solve_team_gains(innovation_model(inst.joint), inst.cost);
        CHECK(gains.residual <= Tolerances::residual);
    }
}
