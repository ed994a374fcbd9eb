#include "cprl/sketch_raster.hpp"

#include <cctype>

#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"

namespace cprl {

SketchRaster::SketchRaster(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ < kMinSide || height_ < kMinSide) {
    throw DataError("sketch raster must be at least 8x8 pixels");
  }
  if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw DataError("sketch raster pixel count does not match its dimensions");
  }
}

namespace {

class PgmReader {
 public:
  explicit PgmReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads an unsigned decimal.
  long next_int() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("PGM: expected a number");
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000) throw FormatError("PGM: number out of range");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  void skip_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("PGM: missing separator before raster data");
    }
    ++pos_;
  }

  std::string_view rest() const { return bytes_.substr(pos_); }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

SketchRaster decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw FormatError("not a PGM file (expected P5 or P2)");
  }
  const bool binary = bytes[1] == '5';
  PgmReader in(bytes);
  const long width = in.next_int();
  const long height = in.next_int();
  const long maxval = in.next_int();
  if (maxval < 1 || maxval > 255) throw FormatError("PGM maxval must lie in [1, 255]");
  if (width < 1 || height < 1) throw FormatError("PGM dimensions must be positive");

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint8_t> pixels(count);
  if (binary) {
    in.skip_single_space();
    const auto data = in.rest();
    if (data.size() < count) throw FormatError("PGM raster data truncated");
    for (std::size_t i = 0; i < count; ++i) pixels[i] = static_cast<std::uint8_t>(data[i]);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const long v = in.next_int();
      if (v > maxval) throw FormatError("PGM sample exceeds maxval");
      pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return SketchRaster(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

SketchRaster load_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::string encode_pgm(const SketchRaster& raster) {
  std::string out = "P5\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(raster.pixels().data()), raster.pixels().size());
  return out;
}

}  // namespace cprl
