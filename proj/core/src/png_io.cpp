#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "mkdet/error.hpp"
#include "mkdet/image.hpp"

namespace mkdet {
namespace {

// libpng's simplified API reports failures through return codes, which keeps
// C++ exceptions out of libpng's C frames.
struct PngImage {
  png_image image{};
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

void begin_read(PngImage& png, const std::filesystem::path& path) {
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + png.image.message);
  }
}

}  // namespace

GrayImage read_png(const std::filesystem::path& path) {
  PngImage png;
  begin_read(png, path);
  const bool color = (png.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  const int w = static_cast<int>(png.image.width);
  const int h = static_cast<int>(png.image.height);
  std::vector<png_byte> raw(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, raw.data(), 0, nullptr)) {
    throw DataError("cannot decode PNG " + path.string() + ": " + png.image.message);
  }
  GrayImage out(w, h);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const png_byte* p = raw.data() + i * channels;
    out.pixels[i] = color ? (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0 : p[0] / 255.0;
  }
  return out;
}

std::pair<int, int> read_png_size(const std::filesystem::path& path) {
  PngImage png;
  begin_read(png, path);
  return {static_cast<int>(png.image.width), static_cast<int>(png.image.height)};
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<png_byte> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<png_byte>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  }
  PngImage png;
  png.image.width = static_cast<png_uint_32>(image.width);
  png.image.height = static_cast<png_uint_32>(image.height);
  png.image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, raw.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(image.width);
  png.image.height = static_cast<png_uint_32>(image.height);
  png.image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, image.bytes.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

}  // namespace mkdet
