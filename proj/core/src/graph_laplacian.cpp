#include "cprl/graph_laplacian.hpp"

#include <cmath>

#include "cprl/error.hpp"

namespace cprl {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& f) {
  const Eigen::VectorXd sq = f.colwise().squaredNorm().transpose();
  Eigen::MatrixXd d = -2.0 * (f.transpose() * f);
  d.colwise() += sq;
  d.rowwise() += sq.transpose();
  // Exact zeros on the diagonal and symmetric rounding.
  for (Index p = 0; p < d.rows(); ++p) {
    d(p, p) = 0.0;
    for (Index q = p + 1; q < d.cols(); ++q) {
      const double x = std::max(0.0, 0.5 * (d(p, q) + d(q, p)));
      d(p, q) = x;
      d(q, p) = x;
    }
  }
  return d;
}

}  // namespace

GraphLaplacian::GraphLaplacian(Eigen::MatrixXd weights, Index sketch_count)
    : weights_(std::move(weights)), sketch_count_(sketch_count) {
  if (weights_.rows() != weights_.cols()) throw DimensionError("weight matrix must be square");
  if (sketch_count_ < 0 || sketch_count_ > weights_.rows()) throw DimensionError("sketch count out of range");
  if (!weights_.allFinite()) throw DataError("weight matrix has non-finite entries");
  for (Index p = 0; p < weights_.rows(); ++p) {
    weights_(p, p) = 0.0;
    for (Index q = 0; q < p; ++q) {
      if (weights_(p, q) != weights_(q, p)) throw DataError("weight matrix is not symmetric");
      if (weights_(p, q) < 0.0) throw DataError("weight matrix has negative entries");
    }
  }
  laplacian_ = -weights_;
  laplacian_.diagonal() = weights_.rowwise().sum();
}

GraphLaplacian GraphLaplacian::from_laplacian(const Eigen::MatrixXd& laplacian, Index sketch_count) {
  Eigen::MatrixXd w = -laplacian;
  w.diagonal().setZero();
  for (Index p = 0; p < w.rows(); ++p) {
    for (Index q = 0; q < w.cols(); ++q) {
      if (w(p, q) == 0.0) w(p, q) = 0.0;  // drop -0 from negating zeros
    }
  }
  return GraphLaplacian(std::move(w), sketch_count);
}

GraphLaplacian build_weights(const FeatureMatrix& fs, const FeatureMatrix& fi, const GroupAssignment& groups_s,
                             const GroupAssignment& groups_i, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (groups_s.samples() != fs.samples() || groups_i.samples() != fi.samples()) {
    throw DimensionError("group assignment does not cover every sample");
  }
  const Index k = fs.samples();
  const Index l = fi.samples();
  const double scale = 1.0 / (2.0 * sigma * sigma);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k + l, k + l);
  w.topLeftCorner(k, k) = (-scale * squared_distances(fs.values()).array()).exp().matrix();
  w.bottomRightCorner(l, l) = (-scale * squared_distances(fi.values()).array()).exp().matrix();
  for (Index p = 0; p < k; ++p) {
    for (Index q = 0; q < l; ++q) {
      if (groups_s.group(p) == groups_i.group(q)) {
        w(p, k + q) = 1.0;
        w(k + q, p) = 1.0;
      }
    }
  }
  return GraphLaplacian(std::move(w), k);
}

double laplacian_quadform(const GraphLaplacian& lap, const Eigen::MatrixXd& joint_codes,
                          const Eigen::VectorXd& v_joint) {
  if (joint_codes.cols() != lap.nodes() || v_joint.size() != lap.nodes()) {
    throw DimensionError("laplacian_quadform: codes/pacing width does not match the graph");
  }
  const Eigen::MatrixXd cv = joint_codes * v_joint.asDiagonal();
  // Tr(CV L (CV)^T) = sum_pq L_pq <cv_p, cv_q>; clamp tiny negative rounding.
  const double value = ((cv.transpose() * cv).array() * lap.laplacian().array()).sum();
  return std::max(0.0, value);
}

double laplacian_quadform(const GraphLaplacian& lap, const CodeMatrix& joint_codes, const PacingState& pacing) {
  return laplacian_quadform(lap, joint_codes.values(), pacing.v_joint());
}

}  // namespace cprl
