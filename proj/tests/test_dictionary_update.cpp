#include <gtest/gtest.h>

#include "cprl/dictionary_update.hpp"
#include "oracles.hpp"

using namespace cprl;

namespace {

Eigen::MatrixXd scalar(double x) { return Eigen::MatrixXd::Constant(1, 1, x); }

double norm_slack(const Eigen::MatrixXd& d) { return d.colwise().norm().maxCoeff() - 1.0; }

}  // namespace

TEST(DictionaryUpdate, ScalarInteriorAndActive) {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  EXPECT_NEAR(update_dictionary(scalar(0.5), scalar(1.0), one, scalar(0.1)).atoms(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(update_dictionary(scalar(2.0), scalar(1.0), one, scalar(0.1)).atoms(0, 0), 1.0, 1e-12);
}

TEST(DictionaryUpdate, DeadAtomKeepsIncomingValue) {
  Rng rng(1);
  const auto f = oracle::random_matrix(3, 5, rng);
  Eigen::MatrixXd c = oracle::random_matrix(2, 5, rng);
  c.row(1).setZero();
  const auto d0 = oracle::unit_columns(oracle::random_matrix(3, 2, rng));
  const auto r = update_dictionary(f, c, Eigen::VectorXd::Ones(5), d0);
  EXPECT_EQ(r.atoms.col(1), d0.col(1));
  ASSERT_EQ(r.dead_atoms.size(), 1u);
  EXPECT_EQ(r.dead_atoms[0], 1);
}

TEST(DictionaryUpdate, ZeroWeightSamplesHaveNoInfluence) {
  Rng rng(2);
  auto f = oracle::random_matrix(4, 6, rng);
  auto c = oracle::random_matrix(3, 6, rng);
  Eigen::VectorXd v(6);
  v << 0.2, 0.0, 1.0, 0.7, 0.0, 0.4;
  const auto d0 = oracle::unit_columns(oracle::random_matrix(4, 3, rng));
  const auto a = update_dictionary(f, c, v, d0).atoms;
  f.col(1).setZero();
  c.col(1).setZero();
  f.col(4).setZero();
  c.col(4).setZero();
  EXPECT_EQ(update_dictionary(f, c, v, d0).atoms, a);
}

TEST(DictionaryUpdate, KktAndReferenceOnRandomInstances) {
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const Eigen::MatrixXd f = 2.0 * oracle::random_matrix(4, 6, rng);
    const auto c = oracle::random_matrix(3, 6, rng);
    Eigen::VectorXd v(6);
    for (Index j = 0; j < 6; ++j) v(j) = rng.uniform(0.2, 1.0);
    const auto d0 = oracle::unit_columns(oracle::random_matrix(4, 3, rng));
    const auto r = update_dictionary(f, c, v, d0);
    EXPECT_LE(norm_slack(r.atoms), 1e-8);
    EXPECT_LE(r.objective_out, weighted_reconstruction(f, d0, c, v) * (1 + 1e-9));

    const Eigen::MatrixXd ft = f * v.asDiagonal();
    const Eigen::MatrixXd ct = c * v.asDiagonal();
    const Eigen::MatrixXd grad = 2.0 * (r.atoms * ct * ct.transpose() - ft * ct.transpose());
    const double scale = std::max(1.0, (ft * ct.transpose()).norm());
    for (Index j = 0; j < r.atoms.cols(); ++j) {
      if (r.atoms.col(j).norm() < 1.0 - 1e-6) EXPECT_LE(grad.col(j).norm(), 1e-6 * scale);
    }
    const auto ref = oracle::projected_gradient_dictionary(f, c, v, d0, 200000);
    EXPECT_LE(r.objective_out, weighted_reconstruction(f, ref, c, v) + 1e-6);
  }
}

TEST(DictionaryUpdate, ProjectedGradientReferenceAgrees) {
  Rng rng(4);
  const auto f = oracle::random_matrix(3, 5, rng);
  const auto c = oracle::random_matrix(2, 5, rng);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(5);
  const auto d0 = oracle::unit_columns(oracle::random_matrix(3, 2, rng));
  const auto lib = projected_gradient_dictionary(f, c, v, d0, 20000);
  const auto ref = oracle::projected_gradient_dictionary(f, c, v, d0, 20000);
  EXPECT_NEAR(weighted_reconstruction(f, lib, c, v), weighted_reconstruction(f, ref, c, v), 1e-8);
}
