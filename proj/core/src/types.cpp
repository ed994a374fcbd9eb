#include "cprl/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cprl/error.hpp"

namespace cprl {

namespace {

void require_finite(const Eigen::MatrixXd& m, std::string_view what) {
  if (!m.allFinite()) {
    throw DataError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

char modality_tag(Modality m) { return m == Modality::sketch ? 'S' : 'I'; }

Modality parse_modality(std::string_view tag) {
  if (tag == "S" || tag == "s" || tag == "sketch") return Modality::sketch;
  if (tag == "I" || tag == "i" || tag == "image") return Modality::image;
  throw FormatError("unknown modality tag '" + std::string(tag) + "'");
}

std::string_view modality_name(Modality m) { return m == Modality::sketch ? "sketch" : "image"; }

FeatureMatrix::FeatureMatrix(Modality modality, Eigen::MatrixXd values)
    : modality_(modality), values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw DataError("feature matrix must have at least one row and one column");
  }
  require_finite(values_, "feature matrix");
}

Dictionary::Dictionary(Modality modality, Eigen::MatrixXd atoms)
    : modality_(modality), atoms_(std::move(atoms)) {
  if (atoms_.rows() < 1 || atoms_.cols() < 1) {
    throw DataError("dictionary must have at least one atom");
  }
  require_finite(atoms_, "dictionary");
  for (Index j = 0; j < atoms_.cols(); ++j) {
    if (atoms_.col(j).norm() > 1.0 + kNormTolerance) {
      throw DataError("dictionary atom " + std::to_string(j) + " has norm > 1");
    }
  }
}

CodeMatrix::CodeMatrix(Modality modality, Eigen::MatrixXd codes)
    : modality_(modality), codes_(std::move(codes)) {
  require_finite(codes_, "code matrix");
}

CodeMatrix CodeMatrix::joint(Eigen::MatrixXd codes, Index sketch_count) {
  if (sketch_count < 0 || sketch_count > codes.cols()) {
    throw DimensionError("joint code split outside the matrix");
  }
  require_finite(codes, "code matrix");
  CodeMatrix out;
  out.codes_ = std::move(codes);
  out.sketch_count_ = sketch_count;
  return out;
}

CodeMatrix CodeMatrix::joint(const Eigen::MatrixXd& sketch, const Eigen::MatrixXd& image) {
  if (sketch.rows() != image.rows()) {
    throw DimensionError("sketch and image codes have different atom counts");
  }
  Eigen::MatrixXd cj(sketch.rows(), sketch.cols() + image.cols());
  cj << sketch, image;
  return joint(std::move(cj), sketch.cols());
}

Eigen::MatrixXd CodeMatrix::sketch_codes() const { return codes_.leftCols(sketch_count_); }
Eigen::MatrixXd CodeMatrix::image_codes() const { return codes_.rightCols(image_count()); }

CurriculumConstraintSet::CurriculumConstraintSet(const std::vector<CurriculumConstraint>& constraints) {
  for (const auto& c : constraints) add(c);
}

bool CurriculumConstraintSet::add(const CurriculumConstraint& c) {
  if (c.hard == c.easy) return false;
  if (std::find(constraints_.begin(), constraints_.end(), c) != constraints_.end()) return false;
  constraints_.push_back(c);
  return true;
}

void CurriculumConstraintSet::merge(const CurriculumConstraintSet& other) {
  for (const auto& c : other.constraints_) add(c);
}

std::size_t CurriculumConstraintSet::count(Modality m) const {
  return static_cast<std::size_t>(std::count_if(constraints_.begin(), constraints_.end(),
                                                [m](const auto& c) { return c.modality == m; }));
}

std::vector<CurriculumConstraint> CurriculumConstraintSet::ordered() const {
  std::vector<CurriculumConstraint> out;
  out.reserve(constraints_.size());
  for (Modality m : {Modality::sketch, Modality::image}) {
    for (const auto& c : constraints_) {
      if (c.modality == m) out.push_back(c);
    }
  }
  return out;
}

void CurriculumConstraintSet::validate(Index sketch_count, Index image_count) const {
  for (const auto& c : constraints_) {
    const Index n = c.modality == Modality::sketch ? sketch_count : image_count;
    if (c.hard < 0 || c.hard >= n || c.easy < 0 || c.easy >= n) {
      throw DataError("constraint (" + std::string(1, modality_tag(c.modality)) + "," +
                      std::to_string(c.hard) + "," + std::to_string(c.easy) +
                      ") indexes outside the sample range");
    }
  }
}

GroupAssignment::GroupAssignment(Modality modality, std::vector<std::int64_t> group_of)
    : modality_(modality), group_of_(std::move(group_of)) {
  for (auto g : group_of_) ++sizes_[g];
}

Index GroupAssignment::size_of_group_of(Index sample) const { return sizes_.at(group(sample)); }

EasinessScores::EasinessScores(Modality m, std::vector<double> s) : modality(m), scores(std::move(s)) {
  for (double x : scores) {
    if (!std::isfinite(x)) throw DataError("easiness scores must be finite");
  }
}

PacingState::PacingState(Eigen::VectorXd v_sketch, Eigen::VectorXd v_image, Eigen::VectorXd slacks)
    : v_sketch_(std::move(v_sketch)), v_image_(std::move(v_image)), slacks_(std::move(slacks)) {
  auto in_unit = [](const Eigen::VectorXd& v) {
    return v.allFinite() && (v.size() == 0 || (v.minCoeff() >= 0.0 && v.maxCoeff() <= 1.0));
  };
  if (!in_unit(v_sketch_) || !in_unit(v_image_)) {
    throw DataError("pacing weights must lie in [0, 1]");
  }
  if (!slacks_.allFinite() || (slacks_.size() > 0 && slacks_.minCoeff() < 0.0)) {
    throw DataError("curriculum slacks must be nonnegative");
  }
}

PacingState PacingState::ones(Index sketch_count, Index image_count, Index constraint_count) {
  return PacingState(Eigen::VectorXd::Ones(sketch_count), Eigen::VectorXd::Ones(image_count),
                     Eigen::VectorXd::Zero(constraint_count));
}

Eigen::VectorXd PacingState::v_joint() const {
  Eigen::VectorXd v(v_sketch_.size() + v_image_.size());
  v << v_sketch_, v_image_;
  return v;
}

double PacingState::min_v() const {
  double m = 1.0;
  if (v_sketch_.size() > 0) m = std::min(m, v_sketch_.minCoeff());
  if (v_image_.size() > 0) m = std::min(m, v_image_.minCoeff());
  return m;
}

double PacingState::max_ordering_violation(const CurriculumConstraintSet& constraints) const {
  const auto ordered = constraints.ordered();
  if (static_cast<Index>(ordered.size()) != slacks_.size()) {
    throw DimensionError("slack count does not match the constraint set");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& c = ordered[i];
    const auto& v = c.modality == Modality::sketch ? v_sketch_ : v_image_;
    worst = std::max(worst, v(c.hard) - v(c.easy) - slacks_(static_cast<Index>(i)));
  }
  return worst;
}

}  // namespace cprl
