#pragma once

#include <Eigen/Core>

#include "cprl/types.hpp"

namespace cprl {

// Joint (K+L)x(K+L) graph over sketches (first K nodes) and images.
// Self-weights are zero, so L = D - W has zero row sums and the diagonal
// of L is the weighted degree.
class GraphLaplacian {
 public:
  GraphLaplacian(Eigen::MatrixXd weights, Index sketch_count);
  // Recovers W from a stored Laplacian (w_pq = -L_pq off the diagonal).
  static GraphLaplacian from_laplacian(const Eigen::MatrixXd& laplacian, Index sketch_count);

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  Index sketch_count() const { return sketch_count_; }
  Index image_count() const { return weights_.rows() - sketch_count_; }
  Index nodes() const { return weights_.rows(); }

  auto sketch_block() const { return laplacian_.topLeftCorner(sketch_count_, sketch_count_); }
  auto image_block() const { return laplacian_.bottomRightCorner(image_count(), image_count()); }
  // L^{SI}: sketch rows, image columns.
  auto sketch_image_block() const { return laplacian_.topRightCorner(sketch_count_, image_count()); }
  // L^{IS}: image rows, sketch columns.
  auto image_sketch_block() const { return laplacian_.bottomLeftCorner(image_count(), sketch_count_); }

 private:
  Eigen::MatrixXd weights_;
  Eigen::MatrixXd laplacian_;
  Index sketch_count_;
};

// Gaussian kernel inside each modality, 1 across modalities for samples of
// the same group and 0 otherwise.
GraphLaplacian build_weights(const FeatureMatrix& fs, const FeatureMatrix& fi, const GroupAssignment& groups_s,
                             const GroupAssignment& groups_i, double sigma = 1.0);

// Tr(C V L V^T C^T) for joint codes C and pacing weights v = [v_s; v_i].
double laplacian_quadform(const GraphLaplacian& lap, const Eigen::MatrixXd& joint_codes,
                          const Eigen::VectorXd& v_joint);
double laplacian_quadform(const GraphLaplacian& lap, const CodeMatrix& joint_codes, const PacingState& pacing);

}  // namespace cprl
