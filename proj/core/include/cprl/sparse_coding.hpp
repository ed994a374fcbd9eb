#pragma once

#include <Eigen/Core>

#include "cprl/config.hpp"
#include "cprl/graph_laplacian.hpp"
#include "cprl/types.hpp"

namespace cprl {

// Everything the joint code subproblem holds fixed.
struct CodingProblem {
  const Dictionary& ds;
  const Dictionary& di;
  const FeatureMatrix& fs;
  const FeatureMatrix& fi;
  const PacingState& pacing;
  const GraphLaplacian& lap;
  double alpha;
  double beta;
};

// |(Fs - Ds Cs) Vs|^2 + |(Fi - Di Ci) Vi|^2 + alpha |C|_1 + beta Tr(C V L V C^T)
double code_objective(const CodingProblem& p, const Eigen::MatrixXd& cj);
// The same without the l1 term.
double code_smooth_objective(const CodingProblem& p, const Eigen::MatrixXd& cj);
// Gradient of code_smooth_objective, N x (K+L).
Eigen::MatrixXd code_gradient(const CodingProblem& p, const Eigen::MatrixXd& cj);

// sign(x) * max(|x| - tau, 0), elementwise.
Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& x, double tau);
double prox_l1(double x, double tau);

// Largest eigenvalue of the Hessian of code_smooth_objective, by power
// iteration from a fixed start.
double code_lipschitz(const CodingProblem& p, int iterations = 60);

struct CodeUpdateResult {
  Eigen::MatrixXd codes;
  double objective_in = 0.0;
  double objective_out = 0.0;
  int iterations = 0;
  int restarts = 0;
};

// Accelerated proximal gradient on the joint codes. The returned iterate
// never has a larger code_objective than `cj`.
CodeUpdateResult update_codes(const CodingProblem& p, const Eigen::MatrixXd& cj, const CodeSolverConfig& cfg);
CodeMatrix update_codes(const CodingProblem& p, const CodeMatrix& cj, const CodeSolverConfig& cfg);

struct LassoOptions {
  double kkt_tol = 1e-10;
  int max_sweeps = 100000;
};

// min_c |f - D c|^2 + alpha |c|_1 by cyclic coordinate descent, run until
// every coordinate satisfies the subgradient condition within kkt_tol.
class LassoEncoder {
 public:
  LassoEncoder(const Eigen::MatrixXd& dictionary, double alpha, LassoOptions opts = {});

  Eigen::VectorXd encode(const Eigen::VectorXd& f) const;
  // Largest subgradient-optimality violation at c.
  double kkt_violation(const Eigen::VectorXd& f, const Eigen::VectorXd& c) const;
  double objective(const Eigen::VectorXd& f, const Eigen::VectorXd& c) const;

 private:
  const Eigen::MatrixXd& dict_;
  Eigen::MatrixXd gram_;
  double alpha_;
  LassoOptions opts_;
};

Eigen::VectorXd lasso_encode(const Dictionary& d, const Eigen::VectorXd& f, double alpha, LassoOptions opts = {});
Eigen::VectorXd lasso_encode(const Eigen::MatrixXd& d, const Eigen::VectorXd& f, double alpha,
                             LassoOptions opts = {});

}  // namespace cprl
