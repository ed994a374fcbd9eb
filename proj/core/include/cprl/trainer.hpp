#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cprl/config.hpp"
#include "cprl/graph_laplacian.hpp"
#include "cprl/types.hpp"

namespace cprl {

struct ObjectiveTerms {
  double recon_sketch = 0.0;
  double recon_image = 0.0;
  double sparsity = 0.0;
  double laplacian = 0.0;
  double self_paced = 0.0;
  double curriculum = 0.0;

  double total() const { return recon_sketch + recon_image + sparsity + laplacian + self_paced + curriculum; }
  // Reconstruction, sparsity and Laplacian only.
  double representation() const { return recon_sketch + recon_image + sparsity + laplacian; }
};

struct HistoryEntry {
  int iter = 0;
  double gamma = 0.0;
  // Total objective at this iteration's gamma before and after each block.
  double objective_start = 0.0;
  double after_pacing = 0.0;
  double after_codes = 0.0;
  double after_dictionary = 0.0;
  ObjectiveTerms terms;  // at the end of the iteration
  double rel_change = 0.0;
  double min_v = 1.0;
  double max_slack = 0.0;
  // Step taken from the old pacing state toward the QP solution.
  double pacing_step = 0.0;
  bool pacing_converged = true;
};

struct TrainState {
  Dictionary ds;
  Dictionary di;
  CodeMatrix codes;  // joint
  PacingState pacing;
  double gamma = 0.0;
  int iteration = 0;
  bool converged = false;
  std::vector<HistoryEntry> history;
  std::vector<std::string> warnings;
  // Set when a solver failure stopped training; the state is the last good one.
  std::string error;
};

// Everything train() holds fixed. Groups are needed by regularizer A only.
struct TrainData {
  const FeatureMatrix& fs;
  const FeatureMatrix& fi;
  const GraphLaplacian& lap;
  const CurriculumConstraintSet& constraints;
  const GroupAssignment* groups_s = nullptr;
  const GroupAssignment* groups_i = nullptr;
};

// Dictionaries from a warm-up of lasso encoding and dictionary updates with
// all weights at one, started from randomly chosen normalized feature
// columns. Equal feature dimensions share one dictionary learned on the
// stacked samples.
TrainState initialize(const FeatureMatrix& fs, const FeatureMatrix& fi, const ModelConfig& cfg);

ObjectiveTerms objective_terms(const TrainState& state, const TrainData& data, const ModelConfig& cfg,
                               double gamma);
double total_objective(const TrainState& state, const TrainData& data, const ModelConfig& cfg, double gamma);

// Pacing state with all weights at one and the smallest feasible slacks.
PacingState initial_pacing(Index sketch_count, Index image_count, const CurriculumConstraintSet& constraints,
                           double order_margin);

TrainState train(const TrainData& data, const ModelConfig& cfg);
// Continues from `state` (used after initialize()).
TrainState train(TrainState state, const TrainData& data, const ModelConfig& cfg);

// D_sketch.cpm, D_image.cpm, C_sketch.cpm, C_image.cpm, pacing.csv,
// history.csv and config.txt.
void save_checkpoint(const TrainState& state, const ModelConfig& cfg, const std::filesystem::path& dir);
std::string encode_history(const std::vector<HistoryEntry>& history);

}  // namespace cprl
