#include "cprl/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "cprl/error.hpp"

namespace cprl {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'P', 'M', '1'};
constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

double get_f64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return std::bit_cast<double>(v);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

MatrixFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::csv : MatrixFormat::binary;
}

std::string encode_cpm1(const Eigen::MatrixXd& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) {
    throw DimensionError("matrix too large for CPM1");
  }
  std::string out;
  out.reserve(kHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
  out.append(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
  return out;
}

Eigen::MatrixXd decode_cpm1(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("not a CPM1 matrix (bad magic)");
  }
  const std::uint64_t rows = get_u32(bytes, 4);
  const std::uint64_t cols = get_u32(bytes, 8);
  if (bytes.size() != kHeaderBytes + 8 * rows * cols) {
    throw FormatError("CPM1 payload size does not match header dims " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  Eigen::MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t at = kHeaderBytes;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c, at += 8) {
      const double x = get_f64(bytes, at);
      if (!std::isfinite(x)) {
        throw DataError("non-finite value at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
      m(r, c) = x;
    }
  }
  return m;
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw FormatError("cannot format double");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double x = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw FormatError("cannot parse number '" + std::string(text) + "'");
  }
  return x;
}

std::string encode_csv_matrix(const Eigen::MatrixXd& m) {
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out.push_back(',');
      out += format_double(m(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

Eigen::MatrixXd decode_csv_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t f = 0;
    while (true) {
      const std::size_t comma = line.find(',', f);
      const auto field = line.substr(f, comma == std::string_view::npos ? line.size() - f : comma - f);
      const double x = parse_double(field);
      if (!std::isfinite(x)) throw DataError("non-finite value in CSV matrix");
      row.push_back(x);
      if (comma == std::string_view::npos) break;
      f = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged CSV matrix at row " + std::to_string(rows.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty CSV matrix");
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string bytes = read_file(path);
  return format == MatrixFormat::binary ? decode_cpm1(bytes) : decode_csv_matrix(bytes);
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_from_path(path));
}

void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path, MatrixFormat format) {
  write_file_atomic(path, format == MatrixFormat::binary ? encode_cpm1(m) : encode_csv_matrix(m));
}

void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  save_matrix(m, path, format_from_path(path));
}

FeatureMatrix load_features(const std::filesystem::path& path, Modality modality) {
  return FeatureMatrix(modality, load_matrix(path));
}

Dictionary load_dictionary(const std::filesystem::path& path, Modality modality) {
  return Dictionary(modality, load_matrix(path));
}

CodeMatrix load_codes(const std::filesystem::path& path, Modality modality) {
  return CodeMatrix(modality, load_matrix(path));
}

}  // namespace cprl
