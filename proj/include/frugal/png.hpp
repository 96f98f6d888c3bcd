#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace frugal {

/// 8-bit image, row-major with interleaved channels (1 gray, 2 gray+alpha,
/// 3 RGB, 4 RGBA).
struct Image {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

}  // namespace frugal
