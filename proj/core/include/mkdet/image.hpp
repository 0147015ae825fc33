#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace mkdet {

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  long long area() const { return static_cast<long long>(w) * h; }

  bool operator==(const Rect&) const = default;
};

long long intersection_area(const Rect& a, const Rect& b);
double iou(const Rect& a, const Rect& b);
bool contains(int width, int height, const Rect& r);

/// Single-channel luminance image, row-major, values nominally in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

/// Bilinear resampling of `region` of `src` onto an out_w x out_h grid.
///
/// Pixel centers are aligned: output pixel u samples source column
/// region.x + (u + 0.5) * region.w / out_w - 0.5. Sample coordinates are
/// clamped to the region, so pixels outside it never contribute.
GrayImage resample_bilinear(const GrayImage& src, const Rect& region, int out_w, int out_h);

/// 8-bit RGB raster used for annotated output.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bytes;  // r, g, b interleaved

  static RgbImage from_gray(const GrayImage& g);
  void draw_rect(const Rect& r, std::uint8_t red, std::uint8_t green, std::uint8_t blue, int thickness = 1);
};

/// Reads an 8/16-bit grayscale, RGB or palette PNG. Colour is reduced to
/// luminance 0.299R + 0.587G + 0.114B; alpha is ignored. Values map to [0, 1].
GrayImage read_png(const std::filesystem::path& path);

/// Width and height from the PNG header, without decoding pixel data.
std::pair<int, int> read_png_size(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace mkdet
