#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "potpda/pot.hpp"

using namespace potpda;

namespace {

struct Instance {
    std::vector<double> a, b;
    Matrix C;
    double alpha;
};

Instance random_instance(std::mt19937_64& rng, int m, int n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Instance I;
    for (int i = 0; i < m; ++i) I.a.push_back(0.05 + u(rng));
    for (int j = 0; j < n; ++j) I.b.push_back(0.05 + u(rng));
    I.C.resize(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) I.C(i, j) = u(rng) * 3.0;
    double lim = std::min(std::accumulate(I.a.begin(), I.a.end(), 0.0), std::accumulate(I.b.begin(), I.b.end(), 0.0));
    I.alpha = lim * (0.05 + 0.95 * u(rng));
    return I;
}

}  // namespace

TEST(ExactPartialOt, SingleCellIsForced)
{
    const std::vector<double> a{1.0}, b{1.0};
    Matrix C(1, 1);
    C << 3.0;
    const auto r = exact_partial_ot(a, b, C, 1.0);
    EXPECT_NEAR(r.cost, 3.0, 1e-12);
    EXPECT_NEAR(r.plan.matrix(0, 0), 1.0, 1e-12);
}

TEST(ExactPartialOt, TwoByTwoReferenceInstance)
{
    const std::vector<double> a{0.6, 0.4}, b{0.5, 0.5};
    Matrix C(2, 2);
    C << 1, 2, 3, 0;
    const auto r = exact_partial_ot(a, b, C, 0.5);
    EXPECT_NEAR(r.cost, oracle::partial_ot_lp(a, b, C, 0.5), 1e-12);
    EXPECT_NEAR(r.cost, 0.1, 1e-12);
    EXPECT_NEAR(r.plan.matrix(0, 0), 0.1, 1e-12);
    EXPECT_NEAR(r.plan.matrix(1, 1), 0.4, 1e-12);
    EXPECT_NEAR(r.plan.matrix(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(r.plan.matrix(1, 0), 0.0, 1e-12);
}

TEST(ExactPartialOt, ZeroCostGivesZero)
{
    const std::vector<double> a{0.3, 0.3, 0.4};
    const auto r = exact_partial_ot(a, a, Matrix::Zero(3, 3), 0.7);
    EXPECT_NEAR(r.cost, 0.0, 1e-15);
    EXPECT_TRUE(r.plan.feasible());
}

TEST(ExactPartialOt, InfeasibleAlphaAndNegativeMassesThrow)
{
    const std::vector<double> a{0.5, 0.5}, b{0.2, 0.2};
    EXPECT_THROW(exact_partial_ot(a, b, Matrix::Ones(2, 2), 0.5), Error);
    const std::vector<double> neg{-0.1, 0.5};
    EXPECT_THROW(exact_partial_ot(neg, a, Matrix::Ones(2, 2), 0.1), Error);
}

TEST(ExactPartialOt, MatchesIndependentLpOracle)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 3);
    int checked = 0;
    while (checked < 300) {
        const int m = dim(rng), n = dim(rng);
        if (m * n > 6) continue;
        const auto I = random_instance(rng, m, n);
        const double ref = oracle::partial_ot_lp(I.a, I.b, I.C, I.alpha);
        const auto r = exact_partial_ot(I.a, I.b, I.C, I.alpha);
        ASSERT_NEAR(r.cost, ref, 1e-8) << m << "x" << n;
        ASSERT_TRUE(r.plan.feasible(1e-9));
        ++checked;
    }
}

TEST(ExactPartialOt, LineInstancesMatchGreedy)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + static_cast<int>(u(rng) * 8);
        std::vector<double> b(n), costs(n);
        Matrix C(1, n);
        for (int j = 0; j < n; ++j) b[j] = 0.1 + u(rng), costs[j] = u(rng), C(0, j) = costs[j];
        const std::vector<double> a{0.2 + 2.0 * u(rng)};
        const double alpha = std::min(a[0], std::accumulate(b.begin(), b.end(), 0.0)) * (0.1 + 0.9 * u(rng));
        EXPECT_NEAR(exact_partial_ot(a, b, C, alpha).cost, oracle::greedy_line(b, costs, a[0], alpha), 1e-10);
    }
}

TEST(BruteForce, AgreesWithExactOnSmallInstances)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
        const auto I = random_instance(rng, 2, 2 + (t % 2));
        EXPECT_NEAR(brute_force_partial_ot(I.a, I.b, I.C, I.alpha).cost,
                    exact_partial_ot(I.a, I.b, I.C, I.alpha).cost, 1e-8);
    }
}

TEST(BruteForce, SingleCellAndLineCases)
{
    const std::vector<double> one{2.0};
    Matrix C(1, 1);
    C << 1.5;
    EXPECT_NEAR(brute_force_partial_ot(one, one, C, 0.7).cost, 0.7 * 1.5, 1e-12);

    const std::vector<double> a{1.0}, b{0.5, 0.5};
    Matrix C2(1, 2);
    C2 << 2.0, 1.0;
    const auto r = brute_force_partial_ot(a, b, C2, 0.5);
    EXPECT_NEAR(r.cost, 0.5, 1e-12);
    EXPECT_NEAR(r.plan.matrix(0, 1), 0.5, 1e-12);
}

TEST(BruteForce, RejectsLargeInstances)
{
    const std::vector<double> a(3, 1.0);
    EXPECT_THROW(brute_force_partial_ot(a, a, Matrix::Ones(3, 3), 1.0), Error);
}

TEST(ExactPartialOt, MonotoneInAlpha)
{
    std::mt19937_64 rng(21);
    for (int t = 0; t < 50; ++t) {
        auto I = random_instance(rng, 5, 4);
        const double lo = I.alpha * 0.5;
        EXPECT_LE(exact_partial_ot(I.a, I.b, I.C, lo).cost, exact_partial_ot(I.a, I.b, I.C, I.alpha).cost + 1e-12);
    }
}

TEST(ExactPartialOt, ScaleEquivarianceAndTransposeSymmetry)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        auto I = random_instance(rng, 4, 6);
        const double v = exact_partial_ot(I.a, I.b, I.C, I.alpha).cost;
        EXPECT_NEAR(exact_partial_ot(I.a, I.b, 2.5 * I.C, I.alpha).cost, 2.5 * v, 1e-9);
        const Matrix Ct = I.C.transpose();
        EXPECT_NEAR(exact_partial_ot(I.b, I.a, Ct, I.alpha).cost, v, 1e-9);
    }
}

TEST(ExactPartialOt, BalancedDegenerateCase)
{
    // alpha = total(a) = total(b): ordinary balanced OT.
    const std::vector<double> a{0.5, 0.5}, b{0.25, 0.75};
    Matrix C(2, 2);
    C << 0, 1, 1, 0;
    const auto r = exact_partial_ot(a, b, C, 1.0);
    EXPECT_NEAR(r.cost, 0.25, 1e-12);
    EXPECT_TRUE(r.plan.feasible());
}

TEST(EntropicPartialOt, ZeroCostAnyEpsilon)
{
    const std::vector<double> a{0.5, 0.5}, b{0.3, 0.3, 0.4};
    for (double eps : {0.01, 1.0, 7.0}) {
        const auto r = entropic_partial_ot(a, b, Matrix::Zero(2, 3), 0.6, {eps, 5000, 1e-9});
        EXPECT_NEAR(r.cost, 0.0, 1e-15);
        EXPECT_TRUE(r.plan.feasible(1e-6));
    }
}

TEST(EntropicPartialOt, TwoByTwoWithinTwoPercent)
{
    const std::vector<double> a{0.6, 0.4}, b{0.5, 0.5};
    Matrix C(2, 2);
    C << 1, 2, 3, 0;
    const auto r = entropic_partial_ot(a, b, C, 0.5, {0.01 * 3.0, 5000, 1e-9});
    EXPECT_NEAR(r.cost, 0.1, 0.02 * 0.1);
    EXPECT_LE(r.plan.cap_violation(), 1e-6);
    EXPECT_LE(r.plan.mass_error(), 1e-8);
}

TEST(EntropicPartialOt, DefaultsAcceptedAndFeasible)
{
    const SolverConfig cfg;
    EXPECT_DOUBLE_EQ(cfg.epsilon, 7.0);
    EXPECT_EQ(cfg.max_iter, 5000);
    std::mt19937_64 rng(2);
    auto I = random_instance(rng, 6, 5);
    const auto r = entropic_partial_ot(I.a, I.b, I.C, I.alpha, cfg);
    EXPECT_TRUE(r.plan.feasible(1e-6));
}

TEST(EntropicPartialOt, UnderflowIsReported)
{
    const std::vector<double> a{1.0}, b{0.5, 0.5};
    Matrix C(1, 2);
    C << 0.0, 1000.0;
    EXPECT_THROW(entropic_partial_ot(a, b, C, 0.5, {1.0, 100, 1e-9}), Error);
}

TEST(EntropicPartialOt, NonConvergenceIsFlaggedNotThrown)
{
    std::mt19937_64 rng(4);
    auto I = random_instance(rng, 5, 5);
    const auto r = entropic_partial_ot(I.a, I.b, I.C, I.alpha, {0.05, 2, 1e-15});
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 2);
    EXPECT_LE(r.plan.mass_error(), 1e-9);
}

TEST(EntropicPartialOt, ApproachesExactAsEpsilonShrinks)
{
    std::mt19937_64 rng(17);
    for (int t = 0; t < 10; ++t) {
        auto I = random_instance(rng, 5, 7);
        const double exact = exact_partial_ot(I.a, I.b, I.C, I.alpha).cost;
        const double mx = I.C.maxCoeff();
        double prev_gap = std::numeric_limits<double>::infinity();
        for (double f : {0.5, 0.1, 0.02, 0.004, 0.002}) {
            const double gap = entropic_partial_ot(I.a, I.b, I.C, I.alpha, {f * mx, 50000, 1e-10}).cost - exact;
            EXPECT_GE(gap, -1e-9);
            EXPECT_LE(gap, prev_gap + 1e-9);
            prev_gap = gap;
        }
        // entropy of a mass-alpha plan varies by at most alpha*log(mn)
        EXPECT_LE(prev_gap, 0.002 * mx * I.alpha * std::log(35.0) + 1e-9);
    }
}

TEST(PwDistance, IdenticalMeasuresGiveZero)
{
    std::vector<Vector> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(Vector::Constant(2, i * 0.7));
    const auto C = feature_cost_matrix(pts, pts, 1.3).entries;
    const auto u = uniform_masses(5, 1.0);
    EXPECT_NEAR(pw_distance(u, u, C, 1.0, OtMethod::exact), 0.0, 1e-12);
}
