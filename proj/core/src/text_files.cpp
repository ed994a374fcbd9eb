#include "cprl/text_files.hpp"

#include <charconv>
#include <map>
#include <set>

#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"

namespace cprl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Data lines, with an optional leading header matching `header` dropped.
std::vector<std::string_view> data_lines(std::string_view text, std::string_view header) {
  auto lines = split_lines(text);
  if (!lines.empty() && lines.front() == header) lines.erase(lines.begin());
  return lines;
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t n, std::string_view what) {
  if (fields.size() != n) {
    throw FormatError(std::string(what) + ": expected " + std::to_string(n) + " fields, got " +
                      std::to_string(fields.size()));
  }
}

}  // namespace

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    if (!line.empty()) out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

Index parse_index(std::string_view field) {
  field = trim(field);
  long long v = 0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || end != field.data() + field.size() || field.empty()) {
    throw FormatError("cannot parse integer '" + std::string(field) + "'");
  }
  return static_cast<Index>(v);
}

std::string encode_scores(const EasinessScores& scores) {
  std::string out;
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    out += std::to_string(i) + "," + format_double(scores.scores[i]) + "\n";
  }
  return out;
}

EasinessScores decode_scores(std::string_view text, Modality modality) {
  std::map<Index, double> by_index;
  for (auto line : data_lines(text, "index,score")) {
    const auto f = split_fields(line);
    expect_fields(f, 2, "scores file");
    const Index i = parse_index(f[0]);
    if (i < 0) throw DataError("negative index in scores file");
    if (!by_index.emplace(i, parse_double(f[1])).second) {
      throw DataError("duplicate index " + std::to_string(i) + " in scores file");
    }
  }
  std::vector<double> scores;
  for (const auto& [i, s] : by_index) {
    if (i != static_cast<Index>(scores.size())) {
      throw DataError("scores file is missing index " + std::to_string(scores.size()));
    }
    scores.push_back(s);
  }
  return EasinessScores(modality, std::move(scores));
}

EasinessScores load_scores(const std::filesystem::path& path, Modality modality) {
  return decode_scores(read_file(path), modality);
}

const GroupAssignment& GroupsFile::get(Modality m) const {
  const auto& g = m == Modality::sketch ? sketch : image;
  if (!g) throw DataError(std::string("groups file has no ") + std::string(modality_name(m)) + " entries");
  return *g;
}

std::string encode_groups(const std::vector<GroupAssignment>& groups) {
  std::string out;
  for (const auto& g : groups) {
    for (Index i = 0; i < g.samples(); ++i) {
      out += std::string(1, modality_tag(g.modality())) + "," + std::to_string(i) + "," +
             std::to_string(g.group(i)) + "\n";
    }
  }
  return out;
}

GroupsFile decode_groups(std::string_view text) {
  std::map<Index, std::int64_t> rows[2];
  for (auto line : data_lines(text, "modality,index,group_id")) {
    const auto f = split_fields(line);
    expect_fields(f, 3, "groups file");
    const Modality m = parse_modality(f[0]);
    const Index i = parse_index(f[1]);
    if (i < 0) throw DataError("negative index in groups file");
    if (!rows[m == Modality::sketch ? 0 : 1].emplace(i, parse_index(f[2])).second) {
      throw DataError("sample " + std::to_string(i) + " assigned to more than one group");
    }
  }
  GroupsFile out;
  for (int k = 0; k < 2; ++k) {
    if (rows[k].empty()) continue;
    std::vector<std::int64_t> group_of;
    for (const auto& [i, g] : rows[k]) {
      if (i != static_cast<Index>(group_of.size())) {
        throw DataError("groups file is missing index " + std::to_string(group_of.size()));
      }
      group_of.push_back(g);
    }
    (k == 0 ? out.sketch : out.image) =
        GroupAssignment(k == 0 ? Modality::sketch : Modality::image, std::move(group_of));
  }
  return out;
}

GroupsFile load_groups(const std::filesystem::path& path) { return decode_groups(read_file(path)); }

std::string encode_constraints(const CurriculumConstraintSet& constraints) {
  std::string out;
  for (const auto& c : constraints.constraints()) {
    out += std::string(1, modality_tag(c.modality)) + "," + std::to_string(c.hard) + "," +
           std::to_string(c.easy) + "\n";
  }
  return out;
}

CurriculumConstraintSet decode_constraints(std::string_view text) {
  CurriculumConstraintSet out;
  for (auto line : data_lines(text, "modality,hard_index,easy_index")) {
    const auto f = split_fields(line);
    expect_fields(f, 3, "constraints file");
    const CurriculumConstraint c{parse_modality(f[0]), parse_index(f[1]), parse_index(f[2])};
    if (c.hard < 0 || c.easy < 0) throw DataError("negative index in constraints file");
    out.add(c);
  }
  return out;
}

CurriculumConstraintSet load_constraints(const std::filesystem::path& path) {
  return decode_constraints(read_file(path));
}

std::string encode_matches(const MatchList& matches) {
  std::string out;
  for (const auto& [s, i] : matches) out += std::to_string(s) + "," + std::to_string(i) + "\n";
  return out;
}

MatchList decode_matches(std::string_view text) {
  MatchList out;
  for (auto line : data_lines(text, "sketch_id,image_id")) {
    const auto f = split_fields(line);
    expect_fields(f, 2, "matches file");
    out.emplace_back(parse_index(f[0]), parse_index(f[1]));
  }
  return out;
}

MatchList load_matches(const std::filesystem::path& path) { return decode_matches(read_file(path)); }

std::string encode_pacing(const PacingState& pacing) {
  std::string out = "modality,index,v\n";
  for (Index i = 0; i < pacing.v_sketch().size(); ++i) {
    out += "S," + std::to_string(i) + "," + format_double(pacing.v_sketch()(i)) + "\n";
  }
  for (Index i = 0; i < pacing.v_image().size(); ++i) {
    out += "I," + std::to_string(i) + "," + format_double(pacing.v_image()(i)) + "\n";
  }
  return out;
}

}  // namespace cprl
