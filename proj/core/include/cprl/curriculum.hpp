#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "cprl/sketch_raster.hpp"
#include "cprl/types.hpp"

namespace cprl {

struct EdgenessOptions {
  int n_windows = 100;
  int top_count = 30;
  double min_scale = 0.2;
  double max_scale = 0.8;
};

// Median stroke density over the densest `top_count` of `n_windows` random
// square windows. Per window the generator draws, in order: the side as
// round(uniform(min_scale, max_scale) * min(width, height)) clamped to at
// least 1, then the left column, then the top row, each uniform over the
// positions that keep the window inside the raster.
double edgeness_score(const SketchRaster& raster, std::uint64_t rng_seed, const EdgenessOptions& opts = {});

// Every ordered pair with score[easy] - score[hard] >= delta (and > 0)
// becomes (hard, easy); then round(rho * count) of them are kept, chosen
// uniformly at random. Output keeps (hard, easy) lexicographic order.
CurriculumConstraintSet constraints_from_scores(const EasinessScores& scores, double delta, double rho,
                                                std::uint64_t rng_seed);

// 0.1 * (max - min) of the scores.
double default_delta(const EasinessScores& scores);

using IndexPair = std::pair<Index, Index>;

// Pairs each sketch with its nearest other sketch (Euclidean, ties to the
// lower index) inside its own group. Singleton groups produce nothing and
// an unordered pair appears once, in the orientation first produced.
std::vector<IndexPair> propose_annotation_pairs(const FeatureMatrix& fs, const GroupAssignment& groups);

enum class AnnotationChoice { left, right, skip };

AnnotationChoice parse_choice(std::string_view token);
std::string_view to_string(AnnotationChoice c);

struct AnnotationAnswer {
  IndexPair pair;  // (left, right)
  AnnotationChoice choice;
};

// left -> (hard = right, easy = left); right -> the mirror; skip -> nothing.
CurriculumConstraintSet constraints_from_annotations(const std::vector<AnnotationAnswer>& answers,
                                                     Modality modality = Modality::sketch);

}  // namespace cprl
