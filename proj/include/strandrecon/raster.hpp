#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace strandrecon {

/// Planar float32 image: channel c of pixel (x, y) lives at
/// data[(c * height + y) * width + x].
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  Raster() = default;
  Raster(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool empty() const { return data.empty(); }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  float& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

inline constexpr std::uint32_t kRasterMagic = 0x50414D48;  // "HMAP"

// 16-byte header (magic, width, height, channels), little-endian u32,
// followed by planar little-endian float32.
void write_raster(const std::filesystem::path& path, const Raster& r);
Raster read_raster(const std::filesystem::path& path);

}  // namespace strandrecon
