#include "frugal/png.hpp"

#include "frugal/error.hpp"

#include <png.h>

#include <string>

namespace frugal {

namespace {

png_uint_32 format_for(std::uint32_t channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 2: return PNG_FORMAT_GA;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
    default:
      throw Error(ErrorKind::InvalidArgument,
                  "png: unsupported channel count " + std::to_string(channels));
  }
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.width == 0 || image.height == 0) throw Error(ErrorKind::InvalidArgument, "png: empty image");
  const png_uint_32 format = format_for(image.channels);
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw Error(ErrorKind::Shape, "png: pixel buffer does not match the geometry");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = image.width;
  png.height = image.height;
  png.format = format;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, std::string("png: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, std::string("png: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::Parse, std::string("png: ") + png.message);
  }
  // Keep the stored layout; only palette and 16-bit images are converted.
  png.format &= ~(PNG_FORMAT_FLAG_COLORMAP | PNG_FORMAT_FLAG_LINEAR);
  Image image;
  image.width = png.width;
  image.height = png.height;
  image.channels = PNG_IMAGE_SAMPLE_CHANNELS(png.format);
  image.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorKind::Parse, std::string("png: ") + png.message);
  }
  return image;
}

}  // namespace frugal
