#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "cprl/error.hpp"
#include "cprl/graph_laplacian.hpp"
#include "oracles.hpp"

using namespace cprl;

namespace {

FeatureMatrix features(Modality m, Eigen::MatrixXd v) { return FeatureMatrix(m, std::move(v)); }

}  // namespace

TEST(BuildWeights, IdenticalSketchesHaveUnitWeight) {
  Eigen::MatrixXd s(2, 2);
  s << 1, 1, 2, 2;
  Eigen::MatrixXd i(2, 1);
  i << 0, 0;
  const auto lap = build_weights(features(Modality::sketch, s), features(Modality::image, i),
                                 GroupAssignment(Modality::sketch, {0, 0}), GroupAssignment(Modality::image, {1}));
  EXPECT_EQ(lap.weights()(0, 1), 1.0);
  EXPECT_EQ(lap.weights()(0, 0), 0.0);
}

TEST(BuildWeights, CrossModalWeightsFollowGroups) {
  Rng rng(3);
  const auto lap = build_weights(features(Modality::sketch, oracle::random_matrix(3, 2, rng)),
                                 features(Modality::image, oracle::random_matrix(4, 2, rng)),
                                 GroupAssignment(Modality::sketch, {0, 1}),
                                 GroupAssignment(Modality::image, {1, 0}));
  EXPECT_EQ(lap.weights()(0, 2), 0.0);  // sketch 0 (class 0) vs image 0 (class 1)
  EXPECT_EQ(lap.weights()(0, 3), 1.0);
  EXPECT_EQ(lap.weights()(1, 2), 1.0);
  EXPECT_EQ(lap.weights()(3, 0), 1.0);
}

TEST(BuildWeights, GaussianKernelValue) {
  Eigen::MatrixXd s(1, 2);
  s << 0.0, 2.0;
  const auto lap = build_weights(features(Modality::sketch, s), features(Modality::image, Eigen::MatrixXd::Zero(1, 1)),
                                 GroupAssignment(Modality::sketch, {0, 0}), GroupAssignment(Modality::image, {0}),
                                 2.0);
  EXPECT_NEAR(lap.weights()(0, 1), std::exp(-4.0 / 8.0), 1e-15);
}

TEST(GraphLaplacian, StructureOnRandomGraphs) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(9));
    const GraphLaplacian lap(oracle::random_weights(n, rng), 1 + static_cast<Index>(rng.uniform_index(n - 1)));
    const auto& l = lap.laplacian();
    EXPECT_TRUE(l == l.transpose());
    EXPECT_LE(l.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l).eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(GraphLaplacian, RejectsAsymmetricOrNegative) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(0, 1) = 1.0;
  EXPECT_THROW(GraphLaplacian(w, 1), DataError);
  w(1, 0) = 1.0;
  EXPECT_NO_THROW(GraphLaplacian(w, 1));
  w(0, 1) = w(1, 0) = -1.0;
  EXPECT_THROW(GraphLaplacian(w, 1), DataError);
}

TEST(GraphLaplacian, FromLaplacianRecoversWeights) {
  Rng rng(2);
  const GraphLaplacian a(oracle::random_weights(5, rng), 2);
  const auto b = GraphLaplacian::from_laplacian(a.laplacian(), 2);
  EXPECT_TRUE(b.weights().isApprox(a.weights(), 1e-15));
}

TEST(Quadform, ZeroWeightsAndConstantCodes) {
  Rng rng(4);
  const GraphLaplacian empty(Eigen::MatrixXd::Zero(4, 4), 2);
  EXPECT_EQ(laplacian_quadform(empty, oracle::random_matrix(3, 4, rng), Eigen::VectorXd::Ones(4)), 0.0);
  const GraphLaplacian full(oracle::random_weights(4, rng, 1.0), 2);
  const Eigen::MatrixXd same = oracle::random_matrix(3, 1, rng).replicate(1, 4);
  EXPECT_NEAR(laplacian_quadform(full, same, Eigen::VectorXd::Constant(4, 0.3)), 0.0, 1e-12);
}

TEST(Quadform, MatchesPairwiseOracleAndScales) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd w = oracle::random_weights(4, rng);
    const GraphLaplacian lap(w, 2);
    const auto c = oracle::random_matrix(3, 4, rng);
    Eigen::VectorXd v(4);
    for (Index p = 0; p < 4; ++p) v(p) = rng.uniform();
    const double q = laplacian_quadform(lap, c, v);
    EXPECT_NEAR(q, oracle::pairwise_quadform(w, c, v), 1e-9);
    EXPECT_GE(q, 0.0);
    EXPECT_NEAR(laplacian_quadform(lap, c, 2.0 * v), 4.0 * q, 1e-9);
  }
}
