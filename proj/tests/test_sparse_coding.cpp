#include <gtest/gtest.h>

#include <Eigen/QR>

#include "cprl/sparse_coding.hpp"
#include "oracles.hpp"

using namespace cprl;

namespace {

// Owns everything a CodingProblem refers to.
struct Instance {
  Dictionary ds;
  Dictionary di;
  FeatureMatrix fs;
  FeatureMatrix fi;
  PacingState pacing;
  GraphLaplacian lap;
  double alpha;
  double beta;

  CodingProblem problem() const { return {ds, di, fs, fi, pacing, lap, alpha, beta}; }
};

Instance random_instance(Rng& rng, Index n, Index k, Index l, double alpha, double beta) {
  const Index ms = 2 + static_cast<Index>(rng.uniform_index(4));
  const Index mi = 2 + static_cast<Index>(rng.uniform_index(4));
  Eigen::VectorXd vs(k);
  Eigen::VectorXd vi(l);
  for (Index p = 0; p < k; ++p) vs(p) = rng.uniform();
  for (Index q = 0; q < l; ++q) vi(q) = rng.uniform();
  return Instance{Dictionary(Modality::sketch, oracle::unit_columns(oracle::random_matrix(ms, n, rng))),
                  Dictionary(Modality::image, oracle::unit_columns(oracle::random_matrix(mi, n, rng))),
                  FeatureMatrix(Modality::sketch, oracle::random_matrix(ms, k, rng)),
                  FeatureMatrix(Modality::image, oracle::random_matrix(mi, l, rng)),
                  PacingState(vs, vi, Eigen::VectorXd()),
                  GraphLaplacian(oracle::random_weights(k + l, rng), k),
                  alpha,
                  beta};
}

}  // namespace

TEST(Prox, SoftThreshold) {
  EXPECT_EQ(prox_l1(3.0, 1.0), 2.0);
  EXPECT_EQ(prox_l1(0.5, 1.0), 0.0);
  EXPECT_EQ(prox_l1(-2.5, 1.0), -1.5);
  Eigen::MatrixXd x(1, 3);
  x << 3.0, 0.5, -2.5;
  Eigen::MatrixXd want(1, 3);
  want << 2.0, 0.0, -1.5;
  EXPECT_EQ(prox_l1(x, 1.0), want);
}

TEST(CodeObjective, ZeroAndExactFit) {
  Rng rng(1);
  Instance z = random_instance(rng, 3, 2, 2, 0.5, 0.5);
  z.fs = FeatureMatrix(Modality::sketch, Eigen::MatrixXd::Zero(z.fs.dim(), 2));
  z.fi = FeatureMatrix(Modality::image, Eigen::MatrixXd::Zero(z.fi.dim(), 2));
  EXPECT_EQ(code_objective(z.problem(), Eigen::MatrixXd::Zero(3, 4)), 0.0);

  Instance e = random_instance(rng, 3, 2, 2, 0.0, 0.0);
  e.pacing = PacingState::ones(2, 2, 0);
  const auto c = oracle::random_matrix(3, 4, rng);
  e.fs = FeatureMatrix(Modality::sketch, e.ds.atoms() * c.leftCols(2));
  e.fi = FeatureMatrix(Modality::image, e.di.atoms() * c.rightCols(2));
  EXPECT_NEAR(code_objective(e.problem(), c), 0.0, 1e-24);
}

TEST(CodeObjective, MatchesTermByTermSum) {
  Rng rng(2);
  const Instance in = random_instance(rng, 3, 1, 2, 0.7, 1.3);
  const auto c = oracle::random_matrix(3, 3, rng);
  const auto& vs = in.pacing.v_sketch();
  const auto& vi = in.pacing.v_image();
  double want = 0.0;
  want += (vs(0) * (in.fs.values().col(0) - in.ds.atoms() * c.col(0))).squaredNorm();
  for (Index q = 0; q < 2; ++q) want += (vi(q) * (in.fi.values().col(q) - in.di.atoms() * c.col(1 + q))).squaredNorm();
  want += 0.7 * c.cwiseAbs().sum();
  want += 1.3 * oracle::pairwise_quadform(in.lap.weights(), c, in.pacing.v_joint());
  EXPECT_NEAR(code_objective(in.problem(), c), want, 1e-10 * std::abs(want));
}

TEST(CodeGradient, ScalarCase) {
  const Instance in{Dictionary(Modality::sketch, Eigen::MatrixXd::Ones(1, 1)),
                    Dictionary(Modality::image, Eigen::MatrixXd::Ones(1, 1)),
                    FeatureMatrix(Modality::sketch, Eigen::MatrixXd::Ones(1, 1)),
                    FeatureMatrix(Modality::image, Eigen::MatrixXd::Zero(1, 0 + 1)),
                    PacingState(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), Eigen::VectorXd()),
                    GraphLaplacian(Eigen::MatrixXd::Zero(2, 2), 1),
                    0.0,
                    0.0};
  Eigen::MatrixXd c(1, 2);
  c << 2.0, 0.0;
  EXPECT_NEAR(code_gradient(in.problem(), c)(0, 0), 2.0, 1e-15);
}

TEST(CodeGradient, ZeroAtLeastSquaresOptimum) {
  Rng rng(3);
  Instance in = random_instance(rng, 3, 2, 2, 0.0, 0.0);
  in.pacing = PacingState::ones(2, 2, 0);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::random_matrix(3, 3, rng)).householderQ();
  in.ds = Dictionary(Modality::sketch, q);
  in.di = Dictionary(Modality::image, q);
  in.fs = FeatureMatrix(Modality::sketch, oracle::random_matrix(3, 2, rng));
  in.fi = FeatureMatrix(Modality::image, oracle::random_matrix(3, 2, rng));
  Eigen::MatrixXd c(3, 4);
  c << q.transpose() * in.fs.values(), q.transpose() * in.fi.values();
  EXPECT_LE(code_gradient(in.problem(), c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CodeGradient, MatchesFiniteDifferences) {
  Rng rng(4);
  const Instance in = random_instance(rng, 5, 3, 4, 0.3, 0.8);
  const auto c = oracle::random_matrix(5, 7, rng);
  const auto p = in.problem();
  const auto fd = oracle::finite_difference([&](const Eigen::MatrixXd& x) { return code_smooth_objective(p, x); }, c);
  const auto g = code_gradient(p, c);
  EXPECT_LE((g - fd).norm() / std::max(1.0, fd.norm()), 1e-5);
}

TEST(UpdateCodes, MonotoneAndStationaryAtOptimum) {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const Instance in = random_instance(rng, 4, 3, 3, 0.2, 0.5);
    const auto c0 = oracle::random_matrix(4, 6, rng);
    CodeSolverConfig cfg;
    const auto r = update_codes(in.problem(), c0, cfg);
    EXPECT_LE(r.objective_out, r.objective_in + 1e-9 * std::abs(r.objective_in));
    EXPECT_NEAR(r.objective_out, code_objective(in.problem(), r.codes), 1e-12 * std::abs(r.objective_out));
    // Restarting from the result cannot improve by more than the tolerance.
    cfg.max_inner_iters = 5000;
    const auto again = update_codes(in.problem(), r.codes, cfg);
    EXPECT_LE(again.objective_out, r.objective_out);
  }
}

TEST(UpdateCodes, LeastSquaresLimit) {
  Rng rng(6);
  Instance in = random_instance(rng, 3, 2, 2, 0.0, 0.0);
  in.pacing = PacingState::ones(2, 2, 0);
  const auto d = oracle::random_matrix(3, 3, rng);
  in.ds = Dictionary(Modality::sketch, d / (1.01 * d.colwise().norm().maxCoeff()));
  in.di = Dictionary(Modality::image, in.ds.atoms());
  in.fs = FeatureMatrix(Modality::sketch, oracle::random_matrix(3, 2, rng));
  in.fi = FeatureMatrix(Modality::image, oracle::random_matrix(3, 2, rng));
  Eigen::MatrixXd f(3, 4);
  f << in.fs.values(), in.fi.values();
  const Eigen::MatrixXd ls = in.ds.atoms().fullPivLu().solve(f);
  CodeSolverConfig cfg;
  cfg.max_inner_iters = 200000;
  cfg.kkt_tol = 0.0;
  const auto r = update_codes(in.problem(), Eigen::MatrixXd::Zero(3, 4), cfg);
  EXPECT_LE((r.codes - ls).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(UpdateCodes, FixedStepAndPlainModesAreMonotone) {
  Rng rng(7);
  const Instance in = random_instance(rng, 4, 3, 2, 0.4, 0.3);
  const auto c0 = oracle::random_matrix(4, 5, rng);
  for (bool accel : {true, false}) {
    CodeSolverConfig cfg;
    cfg.step_rule = StepRule::fixed;
    cfg.accelerated = accel;
    const auto r = update_codes(in.problem(), c0, cfg);
    EXPECT_LE(r.objective_out, r.objective_in);
  }
}

TEST(Lasso, ZeroFeatureGivesZeroCode) {
  Rng rng(8);
  const auto d = oracle::unit_columns(oracle::random_matrix(4, 3, rng));
  EXPECT_EQ(lasso_encode(d, Eigen::VectorXd::Zero(4), 0.5), Eigen::VectorXd::Zero(3));
}

TEST(Lasso, OrthonormalClosedForm) {
  Rng rng(9);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::random_matrix(4, 4, rng)).householderQ();
  const Eigen::VectorXd f = 3.0 * oracle::random_matrix(4, 1, rng);
  const auto c = lasso_encode(q, f, 2.0);
  EXPECT_LE((c - prox_l1(Eigen::MatrixXd(q.transpose() * f), 1.0)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lasso, MatchesSignPatternEnumerationAndKkt) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    const Index n = 1 + static_cast<Index>(rng.uniform_index(6));
    const Index m = n + static_cast<Index>(rng.uniform_index(3));
    const auto d = oracle::unit_columns(oracle::random_matrix(m, n, rng));
    const Eigen::VectorXd f = oracle::random_matrix(m, 1, rng);
    const double alpha = rng.uniform(0.0, 2.0);
    const LassoEncoder enc(d, alpha);
    const auto c = enc.encode(f);
    EXPECT_NEAR(enc.objective(f, c), oracle::lasso_by_sign_patterns(d, f, alpha), 1e-8);
    EXPECT_LE(enc.kkt_violation(f, c), 1e-9);
  }
}

TEST(Lasso, L1NormShrinksWithAlpha) {
  Rng rng(11);
  const auto d = oracle::unit_columns(oracle::random_matrix(5, 7, rng));
  const Eigen::VectorXd f = oracle::random_matrix(5, 1, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {0.01, 0.1, 0.5, 1.0, 3.0}) {
    const double l1 = lasso_encode(d, f, a).lpNorm<1>();
    EXPECT_LE(l1, prev + 1e-9);
    prev = l1;
  }
}
