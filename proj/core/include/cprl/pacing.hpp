#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cprl/config.hpp"
#include "cprl/graph_laplacian.hpp"
#include "cprl/qp_solver.hpp"
#include "cprl/types.hpp"

namespace cprl {

// Squared reconstruction residual of every sample in its own modality.
std::pair<Eigen::VectorXd, Eigen::VectorXd> per_sample_losses(const Dictionary& ds, const Dictionary& di,
                                                              const CodeMatrix& cj, const FeatureMatrix& fs,
                                                              const FeatureMatrix& fi);
std::pair<Eigen::VectorXd, Eigen::VectorXd> per_sample_losses(const Eigen::MatrixXd& ds, const Eigen::MatrixXd& di,
                                                              const Eigen::MatrixXd& cj, const Eigen::MatrixXd& fs,
                                                              const Eigen::MatrixXd& fi);

struct PacingParams {
  double beta = 0.0;
  double gamma = 1.0;
  double mu = 0.0;
  Regularizer regularizer = Regularizer::B;
  LaplacianForm laplacian_form = LaplacianForm::paper;
  double order_margin = 0.0;
  bool literal_sp_b = false;

  static PacingParams from(const ModelConfig& cfg, double gamma);
};

// Variable layout y = [v_sketch | v_image | xi_sketch | xi_image]. Rows of
// G, in order: v <= 1 for every sample, -v <= 0 for every sample, -xi <= 0
// for every constraint, v_hard - v_easy - xi <= -margin for every
// constraint: 2(K+L) + 2C rows in all.
struct PacingQP {
  QpProblem qp;
  Index sketch_count = 0;
  Index image_count = 0;
  std::vector<CurriculumConstraint> constraints;  // slack order
  double order_margin = 0.0;

  Index samples() const { return sketch_count + image_count; }
  // Full square R including the zero slack rows/columns.
  Eigen::MatrixXd dense_R() const;
  Eigen::MatrixXd dense_G() const;
  const Eigen::VectorXd& b() const { return qp.linear; }
  const Eigen::VectorXd& h() const { return qp.bound; }
};

// groups_s / groups_i are required for regularizer A only.
PacingQP assemble_qp(const Eigen::VectorXd& losses_s, const Eigen::VectorXd& losses_i, const Eigen::MatrixXd& cj,
                     const GraphLaplacian& lap, const GroupAssignment* groups_s, const GroupAssignment* groups_i,
                     const CurriculumConstraintSet& constraints, const PacingParams& params);

struct PacingSolution {
  PacingState state;
  double objective = 0.0;
  bool converged = false;  // false: iteration limit hit, best iterate returned
  bool convex = true;
  int iterations = 0;
};

// Solves the QP, clips v into [0, 1] and sets each slack to the smallest
// feasible value max(0, v_hard - v_easy + margin).
PacingSolution solve_pacing(const PacingQP& qp, const QpOptions& opts = {});

// Objective y^T R y + b^T y of a pacing state under `qp`.
double pacing_objective(const PacingQP& qp, const PacingState& state);

// gamma * eta; eta must exceed 1.
double advance_pace(double gamma, double eta);

}  // namespace cprl
