#include <gtest/gtest.h>

#include "potpda/measures.hpp"

using namespace potpda;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST(Measures, EmpiricalMeasureIsUniformWithScale)
{
    const std::vector<Vector> xs{vec({0, 0}), vec({1, 0}), vec({0, 2}), vec({3, 3})};
    const auto m = empirical_feature_measure(xs, LinearFeatureMap::identity(2), 1.0 / 0.35);
    ASSERT_EQ(m.measure.masses.size(), 4u);
    for (double w : m.measure.masses) EXPECT_DOUBLE_EQ(w, 1.0 / (0.35 * 4));
    EXPECT_NEAR(m.measure.total_mass(), 1.0 / 0.35, 1e-12);
    EXPECT_EQ(m.features[2], vec({0, 2}));
}

TEST(Measures, EmptySampleIsRejected)
{
    const std::vector<Vector> none;
    EXPECT_THROW(empirical_feature_measure(none, LinearFeatureMap::identity(2), 1.0), Error);
}

TEST(Measures, FeatureCostMatchesHandComputedDistances)
{
    const std::vector<Vector> s{vec({0, 0}), vec({3, 4})};
    const std::vector<Vector> t{vec({0, 0}), vec({6, 8}), vec({1, 0})};
    const Matrix C = feature_cost_matrix(s, t, 2.0).entries;
    const double expect[2][3] = {{0, 20, 2}, {10, 10, 2 * std::sqrt(20.0)}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(C(i, j), expect[i][j], 1e-12);
}

TEST(Measures, FeatureCostDimensionMismatchThrows)
{
    const std::vector<Vector> s{vec({0, 0})};
    const std::vector<Vector> t{vec({0, 0, 0})};
    EXPECT_THROW(feature_cost_matrix(s, t, 1.0), Error);
}

TEST(Measures, JointCostAddsLabelDistance)
{
    const std::vector<Vector> s{vec({0}), vec({1})};
    const std::vector<double> ys{0.0, 2.0};
    const std::vector<Vector> t{vec({0}), vec({3})};
    const std::vector<double> yhat{0.25, 2.0};
    const auto loss = LossSpec::clipped_abs();
    const Matrix C = joint_cost_matrix(s, ys, t, yhat, 0.5, loss).entries;
    EXPECT_NEAR(C(0, 0), 0.25, 1e-12);
    EXPECT_NEAR(C(0, 1), 1.5 + 1.0, 1e-12);
    EXPECT_NEAR(C(1, 0), 0.5 + 1.0, 1e-12);
    EXPECT_NEAR(C(1, 1), 1.0 + 0.0, 1e-12);
}

TEST(Measures, JointCostReducesToFeatureCostWhenLabelsAgree)
{
    const std::vector<Vector> s{vec({0, 1}), vec({2, 1})};
    const std::vector<Vector> t{vec({1, 1}), vec({5, 5})};
    const std::vector<double> ys{1.0, 1.0}, yhat{1.0, 1.0};
    const Matrix J = joint_cost_matrix(s, ys, t, yhat, 0.7, LossSpec::clipped_abs()).entries;
    const Matrix F = feature_cost_matrix(s, t, 0.7).entries;
    EXPECT_LT((J - F).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Measures, JointCostNeedsMetricLoss)
{
    const std::vector<Vector> s{vec({0})}, t{vec({0})};
    const std::vector<double> y{0.0};
    try {
        joint_cost_matrix(s, y, t, y, 1.0, LossSpec::cross_entropy());
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("joint cost requires metric loss"), std::string::npos);
    }
}

TEST(Measures, ClippedAbsAndZeroOneLosses)
{
    const auto l = LossSpec::clipped_abs();
    EXPECT_DOUBLE_EQ(l(0.2, 0.5), 0.3);
    EXPECT_DOUBLE_EQ(l(0.0, 4.0), 1.0);
    const auto z = LossSpec::zero_one();
    EXPECT_DOUBLE_EQ(z(1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(z(1.0, 2.0), 1.0);
    EXPECT_THROW(LossSpec::cross_entropy()(0.0, 1.0), Error);
}

TEST(Measures, LipschitzHeadClampsAndCertifies)
{
    LipschitzHead h{vec({3, 4}), 0.5, 0.0, 1.0, 5.0};
    EXPECT_TRUE(h.certified());
    EXPECT_DOUBLE_EQ(h(vec({0, 0})), 0.5);
    EXPECT_DOUBLE_EQ(h(vec({1, 1})), 1.0);
    EXPECT_DOUBLE_EQ(h(vec({-1, 0})), 0.0);
    h.gamma = 4.9;
    EXPECT_FALSE(h.certified());
}

TEST(Measures, DatasetValidation)
{
    PdaDataset d;
    d.source = {{vec({0}), 0.0}, {vec({1}), 1.0}};
    d.target_inputs = {vec({0.5})};
    d.target_labels_hidden = {1.0};
    EXPECT_NO_THROW(d.validate());
    d.target_labels_hidden = {2.0};
    EXPECT_THROW(d.validate(), Error);
    d.target_labels_hidden.clear();
    d.target_inputs.push_back(vec({0, 0}));
    EXPECT_THROW(d.validate(), Error);
}

TEST(Measures, SoftmaxProbabilitiesSumToOne)
{
    SoftmaxHead h{Matrix::Random(4, 3) * 50.0, Vector::Random(4)};
    const Vector p = h.probabilities(vec({1, -2, 3}));
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_TRUE((p.array() >= 0.0).all());
}
