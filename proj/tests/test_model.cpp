#include <doctest.h>

#include <random>

#include "mtmse/filter.hpp"
#include "mtmse/linalg.hpp"
#include "mtmse/model.hpp"
#include "mtmse/scenario.hpp"
#include "oracles.hpp"

using namespace mtmse;

namespace {

LinearSystem scalar_system(double a, double c, double q, double r, double sx) {
    LinearSystem sys;
    sys.A = a * Eigen::MatrixXd::Ones(1, 1);
    sys.C = {c * Eigen::MatrixXd::Ones(1, 1)};
    sys.Q = q * Eigen::MatrixXd::Ones(1, 1);
    sys.R = {r * Eigen::MatrixXd::Ones(1, 1)};
    sys.Sigma_x = sx * Eigen::MatrixXd::Ones(1, 1);
    return sys;
}

CostModel scalar_cost(double s, double l) {
    CostModel cost;
    cost.S = {{s * Eigen::MatrixXd::Ones(1, 1)}};
    cost.L = {l * Eigen::MatrixXd::Ones(1, 1)};
    return cost;
}

}  // namespace

TEST_CASE("validate: stable scalar system passes all assumptions") {
    const auto report = validate(scalar_system(0.5, 1.0, 1.0, 0.1, 1.0), scalar_cost(1.0, 1.0));
    CHECK(report.passed);
    for (const auto& c : report.checks) CHECK(c.passed);
}

TEST_CASE("validate: unobservable unstable mode fails detectability") {
    const auto report = validate(scalar_system(2.0, 0.0, 0.0, 0.1, 1.0), scalar_cost(1.0, 1.0));
    CHECK_FALSE(report.passed);
    CHECK_FALSE(report.check("A5").passed);
}

TEST_CASE("validate: UAV system passes") {
    const Scenario sc = make_uav_scenario(4, 4.0);
    const auto report = validate(sc.system, sc.cost());
    CHECK(report.passed);
}

TEST_CASE("validate: R_i = 0 fails A2, dimension mismatch is structural") {
    LinearSystem sys = scalar_system(0.5, 1.0, 1.0, 0.0, 1.0);
    const auto report = validate(sys, scalar_cost(1.0, 1.0));
    CHECK_FALSE(report.check("A2").passed);

    sys.Q = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(validate(sys, scalar_cost(1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("validate is deterministic") {
    const Scenario sc = make_platoon_scenario(2.0);
    const auto a = validate(sc.system, sc.cost());
    const auto b = validate(sc.system, sc.cost());
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        CHECK(a.checks[i].passed == b.checks[i].passed);
        CHECK(a.checks[i].diagnostic == b.checks[i].diagnostic);
    }
}

TEST_CASE("average coupling cost: reference blocks") {
    SUBCASE("n=2 d=1 lambda=4 gives [[2,1],[1,2]]") {
        const CostModel cost = build_average_coupling_cost(2, 1, 4.0);
        Eigen::MatrixXd expect(2, 2);
        expect << 2, 1, 1, 2;
        CHECK((cost.assembled_S() - expect).norm() == doctest::Approx(0.0));
        CHECK(cost.assembled_L().isIdentity(0.0));
    }
    SUBCASE("n=3 lambda=0 gives identity") {
        CHECK(build_average_coupling_cost(3, 1, 0.0).assembled_S().isIdentity(0.0));
    }
    SUBCASE("n=2 d=2 lambda=8: S_12 = 2 I, S_11 = 3 I, positive definite") {
        const CostModel cost = build_average_coupling_cost(2, 2, 8.0);
        CHECK((cost.S[0][1] - 2.0 * Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
        CHECK((cost.S[0][0] - 3.0 * Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
        CHECK(linalg::min_eigenvalue(cost.assembled_S()) > 0.0);
    }
}

TEST_CASE("chain coupling cost: reference blocks") {
    SUBCASE("n=2 lambda=1 gives [[2,-1],[-1,2]]") {
        const CostModel cost = build_chain_coupling_cost(2, 1, 1.0);
        Eigen::MatrixXd expect(2, 2);
        expect << 2, -1, -1, 2;
        CHECK((cost.assembled_S() - expect).norm() == doctest::Approx(0.0));
    }
    SUBCASE("n=4 lambda=0 gives identity") {
        CHECK(build_chain_coupling_cost(4, 1, 0.0).assembled_S().isIdentity(0.0));
    }
    SUBCASE("n=4 lambda=2 stays positive definite") {
        CHECK(linalg::min_eigenvalue(build_chain_coupling_cost(4, 1, 2.0).assembled_S()) > 0.0);
    }
    CHECK_THROWS_AS(build_chain_coupling_cost(1, 1, 1.0), std::invalid_argument);
}

TEST_CASE("cost builders stay symmetric PSD over a lambda grid") {
    for (double lambda : {0.0, 0.1, 1.0, 10.0, 100.0}) {
        for (int n : {1, 2, 4, 6}) {
            for (int d : {1, 2}) {
                const CostModel avg = build_average_coupling_cost(n, d, lambda);
                const Eigen::MatrixXd Sa = avg.assembled_S();
                CHECK((Sa - Sa.transpose()).norm() == 0.0);
                CHECK(linalg::min_eigenvalue(Sa) > -1e-10);
                if (n >= 2) {
                    const CostModel chain = build_chain_coupling_cost(n, d, lambda);
                    const Eigen::MatrixXd Sc = chain.assembled_S();
                    CHECK((Sc - Sc.transpose()).norm() == 0.0);
                    CHECK(linalg::min_eigenvalue(Sc) > -1e-10);
                }
            }
        }
    }
}

TEST_CASE("PBH verdict agrees with Riccati convergence on random instances") {
    std::mt19937_64 gen(71);
    std::uniform_int_distribution<int> dx_dist(1, 4);
    std::uniform_real_distribution<double> scale(0.3, 1.3);
    int validated = 0;
    for (int trial = 0; trial < 400 && validated < 100; ++trial) {
        const int dx = dx_dist(gen);
        LinearSystem sys;
        sys.A = oracles::random_matrix(gen, dx, dx);
        const double rho = linalg::spectral_radius(sys.A);
        if (rho > 0) sys.A *= scale(gen) / rho;
        sys.C = {oracles::random_matrix(gen, 1, dx)};
        sys.Q = oracles::random_pd(gen, dx, 0.05);
        sys.R = {oracles::random_pd(gen, 1, 0.1)};
        sys.Sigma_x = oracles::random_pd(gen, dx, 0.0);
        CostModel cost;
        cost.S = {{Eigen::MatrixXd::Identity(dx, dx)}};
        cost.L = {Eigen::MatrixXd::Identity(dx, dx)};
        const auto report = validate(sys, cost);
        if (!report.passed) continue;
        ++validated;
        CHECK_NOTHROW(riccati_fixed_point(sys, sys.Sigma_x));
    }
    CHECK(validated == 100);
}
