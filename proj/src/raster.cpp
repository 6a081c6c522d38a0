#include "strandrecon/raster.hpp"

#include "binary_io.hpp"

#include <fstream>

namespace strandrecon {

void write_raster(const std::filesystem::path& path, const Raster& r) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  detail::put_u32(os, kRasterMagic);
  detail::put_u32(os, static_cast<std::uint32_t>(r.width));
  detail::put_u32(os, static_cast<std::uint32_t>(r.height));
  detail::put_u32(os, static_cast<std::uint32_t>(r.channels));
  for (float f : r.data) detail::put_f32(os, f);
  if (!os) throw DataError("write failed: " + path.string());
}

Raster read_raster(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open map " + path.string());
  const std::string what = "map " + path.string();
  if (detail::get_u32(is, what) != kRasterMagic) throw DataError("bad magic in " + what);
  const auto w = detail::get_u32(is, what);
  const auto h = detail::get_u32(is, what);
  const auto c = detail::get_u32(is, what);
  if (w == 0 || h == 0 || c == 0 || w > 65536 || h > 65536 || c > 64)
    throw DataError("bad dimensions in " + what);
  Raster r(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  for (float& f : r.data) f = detail::get_f32(is, what);
  return r;
}

}  // namespace strandrecon
