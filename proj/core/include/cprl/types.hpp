#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cprl {

using Index = Eigen::Index;

enum class Modality { sketch, image };

// 'S' / 'I', the tag used in every CSV file.
char modality_tag(Modality m);
Modality parse_modality(std::string_view tag);
std::string_view modality_name(Modality m);

// Column j holds the feature vector of sample j.
class FeatureMatrix {
 public:
  FeatureMatrix(Modality modality, Eigen::MatrixXd values);

  Modality modality() const { return modality_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Index dim() const { return values_.rows(); }
  Index samples() const { return values_.cols(); }

 private:
  Modality modality_;
  Eigen::MatrixXd values_;
};

// Atom matrix with columns of 2-norm at most one.
class Dictionary {
 public:
  static constexpr double kNormTolerance = 1e-8;

  Dictionary(Modality modality, Eigen::MatrixXd atoms);

  Modality modality() const { return modality_; }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  Index dim() const { return atoms_.rows(); }
  Index size() const { return atoms_.cols(); }

 private:
  Modality modality_;
  Eigen::MatrixXd atoms_;
};

// Sparse codes, one column per sample. A joint matrix is the column
// concatenation [C_sketch C_image]; sketch_count() marks the split.
class CodeMatrix {
 public:
  CodeMatrix(Modality modality, Eigen::MatrixXd codes);
  static CodeMatrix joint(Eigen::MatrixXd codes, Index sketch_count);
  static CodeMatrix joint(const Eigen::MatrixXd& sketch, const Eigen::MatrixXd& image);

  bool is_joint() const { return !modality_.has_value(); }
  std::optional<Modality> modality() const { return modality_; }
  const Eigen::MatrixXd& values() const { return codes_; }
  Index atoms() const { return codes_.rows(); }
  Index samples() const { return codes_.cols(); }

  // Only meaningful for joint matrices.
  Index sketch_count() const { return sketch_count_; }
  Index image_count() const { return codes_.cols() - sketch_count_; }
  Eigen::MatrixXd sketch_codes() const;
  Eigen::MatrixXd image_codes() const;

 private:
  CodeMatrix() = default;

  std::optional<Modality> modality_;
  Eigen::MatrixXd codes_;
  Index sketch_count_ = 0;
};

struct CurriculumConstraint {
  Modality modality;
  Index hard;
  Index easy;

  friend auto operator<=>(const CurriculumConstraint&, const CurriculumConstraint&) = default;
};

// Partial-order pairs per modality: v[hard] should not exceed v[easy].
// Insertion order is preserved; duplicates and self-pairs are dropped.
class CurriculumConstraintSet {
 public:
  CurriculumConstraintSet() = default;
  explicit CurriculumConstraintSet(const std::vector<CurriculumConstraint>& constraints);

  // Returns false when the pair was a duplicate or a self-pair.
  bool add(const CurriculumConstraint& c);
  void merge(const CurriculumConstraintSet& other);

  const std::vector<CurriculumConstraint>& constraints() const { return constraints_; }
  std::size_t size() const { return constraints_.size(); }
  bool empty() const { return constraints_.empty(); }
  std::size_t count(Modality m) const;

  // Constraints of one modality followed by the other: the slack layout
  // used by the pacing QP (sketch block first).
  std::vector<CurriculumConstraint> ordered() const;

  // Throws DataError when an index falls outside [0, count).
  void validate(Index sketch_count, Index image_count) const;

  double delta_sketch = 0.0;
  double delta_image = 0.0;
  double rho_sketch = 1.0;
  double rho_image = 1.0;

 private:
  std::vector<CurriculumConstraint> constraints_;
};

class GroupAssignment {
 public:
  GroupAssignment(Modality modality, std::vector<std::int64_t> group_of);

  Modality modality() const { return modality_; }
  Index samples() const { return static_cast<Index>(group_of_.size()); }
  std::int64_t group(Index sample) const { return group_of_.at(static_cast<std::size_t>(sample)); }
  const std::vector<std::int64_t>& group_of() const { return group_of_; }
  const std::map<std::int64_t, Index>& group_sizes() const { return sizes_; }
  // E_g of the group that owns `sample`.
  Index size_of_group_of(Index sample) const;

 private:
  Modality modality_;
  std::vector<std::int64_t> group_of_;
  std::map<std::int64_t, Index> sizes_;
};

// Higher score means easier sample.
struct EasinessScores {
  EasinessScores(Modality modality, std::vector<double> scores);

  Modality modality;
  std::vector<double> scores;
};

// Per-sample pacing weights in [0, 1] and one slack per curriculum
// constraint, in CurriculumConstraintSet::ordered() order.
class PacingState {
 public:
  PacingState(Eigen::VectorXd v_sketch, Eigen::VectorXd v_image, Eigen::VectorXd slacks);
  static PacingState ones(Index sketch_count, Index image_count, Index constraint_count);

  const Eigen::VectorXd& v_sketch() const { return v_sketch_; }
  const Eigen::VectorXd& v_image() const { return v_image_; }
  const Eigen::VectorXd& slacks() const { return slacks_; }
  // [v_sketch; v_image]
  Eigen::VectorXd v_joint() const;
  double min_v() const;

  // Largest violation of v_hard - v_easy <= xi over the constraint set.
  double max_ordering_violation(const CurriculumConstraintSet& constraints) const;

 private:
  Eigen::VectorXd v_sketch_;
  Eigen::VectorXd v_image_;
  Eigen::VectorXd slacks_;
};

}  // namespace cprl
