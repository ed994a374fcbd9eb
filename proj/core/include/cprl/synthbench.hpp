#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cprl/text_files.hpp"
#include "cprl/types.hpp"

namespace cprl {

struct SynthSpec {
  Index sketch_count = 100;
  Index image_count = 100;
  Index sketch_dim = 20;
  Index image_dim = 20;
  Index true_atoms = 10;
  Index classes = 5;
  double noise_easy = 0.01;
  double noise_hard = 0.1;
  double hard_fraction = 0.3;
  std::uint64_t rng_seed = 1;
  // Held-out matched pairs drawn from the same dictionaries.
  Index test_pairs = 0;

  void validate() const;
};

struct SynthSplit {
  FeatureMatrix fs;
  FeatureMatrix fi;
  GroupAssignment groups_s;
  GroupAssignment groups_i;
  MatchList matches;
  EasinessScores easiness_s;
  EasinessScores easiness_i;
  Eigen::MatrixXd codes_s;  // planted codes
  Eigen::MatrixXd codes_i;
  std::vector<bool> hard_s;
  std::vector<bool> hard_i;
};

struct SynthData {
  Eigen::MatrixXd ds_true;
  Eigen::MatrixXd di_true;
  SynthSplit train;
  std::optional<SynthSplit> test;
};

// Sample j of either modality belongs to class j mod classes; sketch j and
// image j share one planted code for j < min(K, L). Codes carry
// max(1, N_true / 5) entries of magnitude in [0.5, 1.5] and random sign on
// a support fixed per class. Exactly round(hard_fraction * count) samples
// per modality receive the hard noise level; easiness is minus the level.
SynthData generate(const SynthSpec& spec);

// fs.cpm, fi.cpm, groups.csv, matches.csv, scores_sketch.csv,
// scores_image.csv, D_sketch_true.cpm, D_image_true.cpm and, with a test
// split, the same names with a _test suffix.
void write_synth(const SynthData& data, const std::filesystem::path& dir);

}  // namespace cprl
