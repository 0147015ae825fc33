#include "mkdet/image.hpp"

#include <algorithm>
#include <cmath>

#include "mkdet/error.hpp"

namespace mkdet {

long long intersection_area(const Rect& a, const Rect& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return 0;
  return static_cast<long long>(x1 - x0) * (y1 - y0);
}

double iou(const Rect& a, const Rect& b) {
  const long long inter = intersection_area(a, b);
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

bool contains(int width, int height, const Rect& r) {
  return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 && r.right() <= width &&
         r.bottom() <= height;
}

GrayImage resample_bilinear(const GrayImage& src, const Rect& region, int out_w, int out_h) {
  if (!contains(src.width, src.height, region)) {
    throw DataError("resample region lies outside the image");
  }
  if (out_w < 1 || out_h < 1) throw DataError("resample target must be non-empty");

  // Column taps are shared by every output row.
  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int origin, int extent, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(extent) / out;
    const double lo = origin;
    const double hi = origin + extent - 1;
    for (int u = 0; u < out; ++u) {
      const double s = std::clamp(origin + (u + 0.5) * scale - 0.5, lo, hi);
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, origin + extent - 1);
      t[static_cast<std::size_t>(u)] = {i0, i1, s - i0};
    }
    return t;
  };
  const auto cx = taps(region.x, region.w, out_w);
  const auto cy = taps(region.y, region.h, out_h);

  GrayImage out(out_w, out_h);
  for (int v = 0; v < out_h; ++v) {
    const Tap& ty = cy[static_cast<std::size_t>(v)];
    const double* r0 = &src.pixels[static_cast<std::size_t>(ty.i0) * src.width];
    const double* r1 = &src.pixels[static_cast<std::size_t>(ty.i1) * src.width];
    for (int u = 0; u < out_w; ++u) {
      const Tap& tx = cx[static_cast<std::size_t>(u)];
      const double top = r0[tx.i0] + (r0[tx.i1] - r0[tx.i0]) * tx.f;
      const double bot = r1[tx.i0] + (r1[tx.i1] - r1[tx.i0]) * tx.f;
      out.at(u, v) = top + (bot - top) * ty.f;
    }
  }
  return out;
}

RgbImage RgbImage::from_gray(const GrayImage& g) {
  RgbImage out;
  out.width = g.width;
  out.height = g.height;
  out.bytes.resize(g.pixels.size() * 3);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    const auto b = static_cast<std::uint8_t>(std::lround(std::clamp(g.pixels[i], 0.0, 1.0) * 255.0));
    out.bytes[3 * i] = out.bytes[3 * i + 1] = out.bytes[3 * i + 2] = b;
  }
  return out;
}

void RgbImage::draw_rect(const Rect& r, std::uint8_t red, std::uint8_t green, std::uint8_t blue,
                         int thickness) {
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    bytes[i] = red;
    bytes[i + 1] = green;
    bytes[i + 2] = blue;
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = r.x; x < r.right(); ++x) {
      put(x, r.y + t);
      put(x, r.bottom() - 1 - t);
    }
    for (int y = r.y; y < r.bottom(); ++y) {
      put(r.x + t, y);
      put(r.right() - 1 - t, y);
    }
  }
}

}  // namespace mkdet
