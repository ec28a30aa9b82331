#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace testpng {

struct Decoded {
  std::uint32_t width = 0, height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved channels
};

/// Reads a PNG with libpng's read API (the writer uses the write API).
Decoded decode(const std::filesystem::path& path);

} // namespace testpng
