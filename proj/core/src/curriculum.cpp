#include "cprl/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cprl/error.hpp"
#include "cprl/rng.hpp"

namespace cprl {

double edgeness_score(const SketchRaster& raster, std::uint64_t rng_seed, const EdgenessOptions& opts) {
  if (opts.n_windows < 1) throw std::invalid_argument("edgeness: n_windows must be >= 1");
  if (opts.top_count < 1) throw std::invalid_argument("edgeness: top_count must be >= 1");
  const int w = raster.width();
  const int h = raster.height();

  // Summed-area table of stroke indicators, (w+1)x(h+1).
  std::vector<std::int64_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto at = [&](int x, int y) -> std::int64_t& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      at(x + 1, y + 1) = at(x, y + 1) + at(x + 1, y) - at(x, y) + (raster.stroke(x, y) ? 1 : 0);
    }
  }

  Rng rng(rng_seed);
  const int min_side = std::min(w, h);
  std::vector<double> densities;
  densities.reserve(static_cast<std::size_t>(opts.n_windows));
  for (int i = 0; i < opts.n_windows; ++i) {
    const double scale = rng.uniform(opts.min_scale, opts.max_scale);
    const int side = std::clamp(static_cast<int>(std::lround(scale * min_side)), 1, min_side);
    const int x0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w - side + 1)));
    const int y0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(h - side + 1)));
    const std::int64_t strokes = at(x0 + side, y0 + side) - at(x0, y0 + side) - at(x0 + side, y0) + at(x0, y0);
    densities.push_back(static_cast<double>(strokes) / (static_cast<double>(side) * side));
  }

  const std::size_t top = std::min(densities.size(), static_cast<std::size_t>(opts.top_count));
  std::partial_sort(densities.begin(), densities.begin() + static_cast<std::ptrdiff_t>(top), densities.end(),
                    std::greater<>());
  // Top values sit in descending order; take their median.
  if (top % 2 == 1) return densities[top / 2];
  return 0.5 * (densities[top / 2 - 1] + densities[top / 2]);
}

CurriculumConstraintSet constraints_from_scores(const EasinessScores& scores, double delta, double rho,
                                                std::uint64_t rng_seed) {
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  const auto& s = scores.scores;
  std::vector<CurriculumConstraint> candidates;
  for (std::size_t hard = 0; hard < s.size(); ++hard) {
    for (std::size_t easy = 0; easy < s.size(); ++easy) {
      const double gap = s[easy] - s[hard];
      if (gap > 0.0 && gap >= delta) {
        candidates.push_back({scores.modality, static_cast<Index>(hard), static_cast<Index>(easy)});
      }
    }
  }

  std::vector<CurriculumConstraint> kept;
  if (rho >= 1.0) {
    kept = std::move(candidates);
  } else {
    const auto n = static_cast<std::uint64_t>(candidates.size());
    const auto k = static_cast<std::uint64_t>(std::llround(rho * static_cast<double>(n)));
    Rng rng(rng_seed);
    auto picks = rng.sample_without_replacement(n, k);
    std::sort(picks.begin(), picks.end());
    kept.reserve(picks.size());
    for (auto i : picks) kept.push_back(candidates[i]);
  }

  CurriculumConstraintSet out(kept);
  if (scores.modality == Modality::sketch) {
    out.delta_sketch = delta;
    out.rho_sketch = rho;
  } else {
    out.delta_image = delta;
    out.rho_image = rho;
  }
  return out;
}

double default_delta(const EasinessScores& scores) {
  if (scores.scores.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(scores.scores.begin(), scores.scores.end());
  return 0.1 * (*hi - *lo);
}

std::vector<IndexPair> propose_annotation_pairs(const FeatureMatrix& fs, const GroupAssignment& groups) {
  if (groups.samples() != fs.samples()) throw DimensionError("group assignment does not cover every sketch");
  const auto& f = fs.values();
  std::vector<IndexPair> pairs;
  std::set<IndexPair> seen;
  for (Index k = 0; k < fs.samples(); ++k) {
    Index best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < fs.samples(); ++j) {
      if (j == k || groups.group(j) != groups.group(k)) continue;
      const double d = (f.col(k) - f.col(j)).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    if (best < 0) continue;
    const IndexPair key{std::min(k, best), std::max(k, best)};
    if (seen.insert(key).second) pairs.emplace_back(k, best);
  }
  return pairs;
}

AnnotationChoice parse_choice(std::string_view token) {
  if (token == "left") return AnnotationChoice::left;
  if (token == "right") return AnnotationChoice::right;
  if (token == "skip") return AnnotationChoice::skip;
  throw DataError("unknown annotation choice '" + std::string(token) + "'");
}

std::string_view to_string(AnnotationChoice c) {
  switch (c) {
    case AnnotationChoice::left: return "left";
    case AnnotationChoice::right: return "right";
    case AnnotationChoice::skip: return "skip";
  }
  return "skip";
}

CurriculumConstraintSet constraints_from_annotations(const std::vector<AnnotationAnswer>& answers,
                                                     Modality modality) {
  CurriculumConstraintSet out;
  for (const auto& a : answers) {
    const auto [left, right] = a.pair;
    if (left < 0 || right < 0) throw DataError("annotation pair with negative index");
    switch (a.choice) {
      case AnnotationChoice::left: out.add({modality, right, left}); break;
      case AnnotationChoice::right: out.add({modality, left, right}); break;
      case AnnotationChoice::skip: break;
    }
  }
  return out;
}

}  // namespace cprl
