#pragma once

#include <vector>

#include <Eigen/Core>

#include "cprl/types.hpp"

namespace cprl {

struct DictionaryUpdateResult {
  Eigen::MatrixXd atoms;
  double objective_in = 0.0;
  double objective_out = 0.0;
  // Atoms whose weighted code row is identically zero; they keep their
  // incoming value.
  std::vector<Index> dead_atoms;
  int dual_iterations = 0;
  bool used_fallback = false;
};

// |(F - D C) V|^2_F for pacing weights v.
double weighted_reconstruction(const Eigen::MatrixXd& f, const Eigen::MatrixXd& d, const Eigen::MatrixXd& c,
                               const Eigen::VectorXd& v);

// min_D |(F - D C) V|^2_F  s.t. |d_j| <= 1, via the Lagrange dual
// D = F~ C~^T (C~ C~^T + diag(lambda))^{-1} with lambda >= 0 found by a
// projected Newton ascent; projected gradient on the primal if the dual
// stalls. Never returns a dictionary worse than `d_in`.
DictionaryUpdateResult update_dictionary(const Eigen::MatrixXd& f, const Eigen::MatrixXd& c, const Eigen::VectorXd& v,
                                         const Eigen::MatrixXd& d_in);
Dictionary update_dictionary(const FeatureMatrix& f, const Eigen::MatrixXd& c, const Eigen::VectorXd& v,
                             const Dictionary& d_in);

// Plain projected gradient on the same problem; used as the fallback and
// exposed for reference solves.
Eigen::MatrixXd projected_gradient_dictionary(const Eigen::MatrixXd& f, const Eigen::MatrixXd& c,
                                              const Eigen::VectorXd& v, Eigen::MatrixXd d, long iterations,
                                              bool accelerated = true);

}  // namespace cprl
