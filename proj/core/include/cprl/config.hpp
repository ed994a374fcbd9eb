#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace cprl {

enum class Regularizer { A, B };
// How the self-paced Laplacian enters the pacing QP.
//   paper: off-diagonal R_pq = beta * w_pq * |c_p - c_q|^2
//   exact: R = diag(loss) + beta * (C^T C o L), the true expansion in v
enum class LaplacianForm { paper, exact };
enum class StepRule { fixed, backtracking };

struct CodeSolverConfig {
  int max_inner_iters = 300;
  StepRule step_rule = StepRule::backtracking;
  double initial_step = 1.0;  // backtracking start; ignored for fixed
  double shrink = 0.5;
  double kkt_tol = 1e-9;      // relative objective change that stops the loop
  bool accelerated = true;

  void validate() const;
};

struct ModelConfig {
  double alpha = 0.1;
  double beta = 0.1;
  // gamma0 == 0 disables self-pacing: V is pinned to 1 (the ablation).
  double gamma0 = 1.0;
  double eta = 1.3;
  double mu = 1.0;
  int dict_size = 30;
  double sigma = 1.0;
  Regularizer regularizer = Regularizer::B;
  LaplacianForm laplacian_form = LaplacianForm::paper;
  int max_outer_iters = 60;
  double rel_tol = 1e-4;
  std::uint64_t rng_seed = 1;

  // Ordering rows read v_hard - v_easy + margin <= xi, a closed stand-in
  // for the strict v_hard < v_easy.
  double order_margin = 1e-3;
  // Use the regularizer-B sign exactly as printed (diag -gamma/2, b = +gamma).
  bool literal_sp_b = false;
  // gamma stops growing once every v reaches this level.
  double pace_saturation = 0.99;
  int warmup_iters = 10;
  CodeSolverConfig code_solver;

  bool self_paced() const { return gamma0 > 0.0; }
  void validate() const;
};

// Flat `key = value` lines; '#' starts a comment. Unknown keys throw.
ModelConfig parse_config(std::string_view text, ModelConfig base = {});
ModelConfig load_config(const std::filesystem::path& path, ModelConfig base = {});
std::string encode_config(const ModelConfig& cfg);

// Applies a named dataset preset on top of `cfg`: cufs, flickr15k, queenmary.
ModelConfig apply_preset(ModelConfig cfg, std::string_view preset);

std::string_view to_string(Regularizer r);
std::string_view to_string(LaplacianForm f);
Regularizer parse_regularizer(std::string_view s);
LaplacianForm parse_laplacian_form(std::string_view s);

}  // namespace cprl
