#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cprl/types.hpp"

namespace cprl {

// Grayscale sketch; 0 is background, anything above 0 is stroke.
class SketchRaster {
 public:
  static constexpr int kMinSide = 8;

  SketchRaster(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  bool stroke(int x, int y) const { return at(x, y) > 0; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

// Binary (P5) or ASCII (P2) PGM with maxval <= 255.
SketchRaster decode_pgm(std::string_view bytes);
SketchRaster load_pgm(const std::filesystem::path& path);
std::string encode_pgm(const SketchRaster& raster);

}  // namespace cprl
