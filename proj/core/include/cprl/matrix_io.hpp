#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "cprl/types.hpp"

namespace cprl {

enum class MatrixFormat { binary, csv };

// ".csv" selects CSV; anything else is the CPM1 binary format.
MatrixFormat format_from_path(const std::filesystem::path& path);

// CPM1 layout: "CPM1", u32-LE rows, u32-LE cols, rows*cols f64-LE row-major.
std::string encode_cpm1(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_cpm1(std::string_view bytes);

// One row per line, comma separated, shortest round-trip decimal form.
std::string encode_csv_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_csv_matrix(std::string_view text);

Eigen::MatrixXd load_matrix(const std::filesystem::path& path, MatrixFormat format);
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);
void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path);

FeatureMatrix load_features(const std::filesystem::path& path, Modality modality);
Dictionary load_dictionary(const std::filesystem::path& path, Modality modality);
CodeMatrix load_codes(const std::filesystem::path& path, Modality modality);

// Whole-file helpers. write_file_atomic writes a sibling temp file and
// renames it over `path`.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text);

}  // namespace cprl
