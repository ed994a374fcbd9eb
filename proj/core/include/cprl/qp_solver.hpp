#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cprl/types.hpp"

namespace cprl {

// min_y  y^T R y + b^T y   s.t.  G y <= h
// R is zero outside its leading dense x dense block, which is all that is
// stored. When every row of G touches at most one of the trailing
// variables, the Newton systems are reduced to the dense block by a Schur
// complement, so thousands of trailing slack variables stay cheap.
struct QpProblem {
  Eigen::MatrixXd quad_block;
  Eigen::VectorXd linear;
  Eigen::SparseMatrix<double, Eigen::RowMajor> ineq;
  Eigen::VectorXd bound;

  Index variables() const { return linear.size(); }
  Index dense_count() const { return quad_block.rows(); }
  Index rows() const { return ineq.rows(); }

  double objective(const Eigen::VectorXd& y) const;
  // max_r (G y - h)_r, clamped below at 0.
  double max_violation(const Eigen::VectorXd& y) const;
  void validate() const;
};

struct QpOptions {
  double tol = 1e-11;
  int max_iters = 200;
  // Proximal-point outer loop for an indefinite quad_block.
  int max_prox_iters = 100;
  double prox_tol = 1e-10;
};

struct QpResult {
  Eigen::VectorXd y;
  double objective = 0.0;
  int iterations = 0;
  int prox_iterations = 0;
  bool converged = false;
  bool convex = true;
  // Smallest eigenvalue of the symmetric quad_block.
  double min_eigenvalue = 0.0;
};

// Mehrotra predictor-corrector interior point. For a PSD quad_block the
// result is the global minimizer; otherwise a proximal-point sequence of
// convexified problems is solved and the result is a KKT point.
QpResult solve_qp(const QpProblem& qp, const QpOptions& opts = {});

}  // namespace cprl
