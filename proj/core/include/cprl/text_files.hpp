#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cprl/types.hpp"

namespace cprl {

// Line-oriented CSV files exchanged between commands. Input formats are
// written without a header; readers skip blank lines and also accept the
// documented header as the first line.

// `index,score`
std::string encode_scores(const EasinessScores& scores);
EasinessScores decode_scores(std::string_view text, Modality modality);
EasinessScores load_scores(const std::filesystem::path& path, Modality modality);

// `modality,index,group_id`
struct GroupsFile {
  std::optional<GroupAssignment> sketch;
  std::optional<GroupAssignment> image;

  const GroupAssignment& get(Modality m) const;
};
std::string encode_groups(const std::vector<GroupAssignment>& groups);
GroupsFile decode_groups(std::string_view text);
GroupsFile load_groups(const std::filesystem::path& path);

// `modality,hard_index,easy_index`
std::string encode_constraints(const CurriculumConstraintSet& constraints);
CurriculumConstraintSet decode_constraints(std::string_view text);
CurriculumConstraintSet load_constraints(const std::filesystem::path& path);

// `sketch_id,image_id`
using MatchList = std::vector<std::pair<Index, Index>>;
std::string encode_matches(const MatchList& matches);
MatchList decode_matches(std::string_view text);
MatchList load_matches(const std::filesystem::path& path);

// `modality,index,v` with a header line.
std::string encode_pacing(const PacingState& pacing);

// Splits on commas after trimming the line; exposed for the CLI readers.
std::vector<std::string_view> split_fields(std::string_view line);
std::vector<std::string_view> split_lines(std::string_view text);
Index parse_index(std::string_view field);

}  // namespace cprl
