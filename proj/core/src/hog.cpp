#include "mkdet/hog.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "mkdet/error.hpp"

namespace mkdet {
namespace {

void validate_layout(const HogConfig& c) {
  if (c.window < 1 || c.cell < 1 || c.window % c.cell != 0) {
    throw ConfigError("hog: window must be a positive multiple of the cell size");
  }
  const int cells = c.window / c.cell;
  if (c.block_cells < 1 || c.block_cells > cells) throw ConfigError("hog: block larger than window");
  if (c.block_stride_cells < 1 || c.block_cells % c.block_stride_cells != 0) {
    throw ConfigError("hog: block stride must divide the block extent");
  }
  if ((cells - c.block_cells) % c.block_stride_cells != 0) {
    throw ConfigError("hog: block stride does not tile the window");
  }
  if (c.bins < 1) throw ConfigError("hog: bins must be positive");
}

}  // namespace

void HogConfig::validate() const {
  validate_layout(*this);
  if (bins < 2) throw ConfigError("hog: at least two orientation bins are required");
  if (!(epsilon > 0)) throw ConfigError("hog: epsilon must be positive");
}

std::uint64_t HogConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(window));
  feed(static_cast<std::uint64_t>(cell));
  feed(static_cast<std::uint64_t>(block_cells));
  feed(static_cast<std::uint64_t>(block_stride_cells));
  feed(static_cast<std::uint64_t>(bins));
  feed(std::bit_cast<std::uint64_t>(epsilon));
  return h;
}

std::size_t hog_dim(const HogConfig& cfg) {
  validate_layout(cfg);
  const int cells = cfg.window / cfg.cell;
  const int blocks = (cells - cfg.block_cells) / cfg.block_stride_cells + 1;
  return static_cast<std::size_t>(blocks) * blocks * cfg.block_cells * cfg.block_cells * cfg.bins;
}

void compute_hog_window(const GrayImage& image, int x0, int y0, const HogConfig& cfg, std::span<double> out) {
  const int n = cfg.window;
  if (x0 < 0 || y0 < 0 || x0 + n > image.width || y0 + n > image.height) {
    throw DataError("hog: window does not fit the image");
  }
  if (out.size() != hog_dim(cfg)) throw DataError("hog: output buffer has the wrong length");

  const int cells = n / cfg.cell;
  const int bins = cfg.bins;
  const double bin_width = 180.0 / bins;
  constexpr double kDeg = 180.0 / std::numbers::pi;

  // Per-cell orientation histograms.
  std::vector<double> hist(static_cast<std::size_t>(cells) * cells * bins, 0.0);
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, n - 1);
    y = std::clamp(y, 0, n - 1);
    return image.at(x0 + x, y0 + y);
  };
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double gx = px(x + 1, y) - px(x - 1, y);
      const double gy = px(x, y + 1) - px(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * kDeg;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const double pos = angle / bin_width;
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const int b0 = static_cast<int>(lower) % bins;
      const int b1 = (b0 + 1) % bins;
      double* h = &hist[(static_cast<std::size_t>(y / cfg.cell) * cells + x / cfg.cell) * bins];
      h[b0] += mag * (1.0 - frac);
      h[b1] += mag * frac;
    }
  }

  // Overlapping blocks, each L2-normalized.
  const int blocks = (cells - cfg.block_cells) / cfg.block_stride_cells + 1;
  const std::size_t block_len = static_cast<std::size_t>(cfg.block_cells) * cfg.block_cells * bins;
  std::size_t o = 0;
  for (int by = 0; by < blocks; ++by) {
    for (int bx = 0; bx < blocks; ++bx) {
      const std::size_t start = o;
      double norm2 = 0.0;
      for (int cy = 0; cy < cfg.block_cells; ++cy) {
        for (int cx = 0; cx < cfg.block_cells; ++cx) {
          const int row = by * cfg.block_stride_cells + cy;
          const int col = bx * cfg.block_stride_cells + cx;
          const double* h = &hist[(static_cast<std::size_t>(row) * cells + col) * bins];
          for (int b = 0; b < bins; ++b) {
            out[o++] = h[b];
            norm2 += h[b] * h[b];
          }
        }
      }
      const double scale = 1.0 / std::sqrt(norm2 + cfg.epsilon * cfg.epsilon);
      for (std::size_t k = start; k < start + block_len; ++k) out[k] *= scale;
    }
  }
}

FeatureVector compute_hog(const GrayImage& patch, const HogConfig& cfg) {
  cfg.validate();
  if (patch.width != cfg.window || patch.height != cfg.window) {
    throw DataError("hog: patch is " + std::to_string(patch.width) + "x" + std::to_string(patch.height) +
                    ", expected " + std::to_string(cfg.window) + "x" + std::to_string(cfg.window));
  }
  FeatureVector fv;
  fv.values.resize(hog_dim(cfg));
  fv.provenance = cfg.hash();
  compute_hog_window(patch, 0, 0, cfg, fv.values);
  return fv;
}

}  // namespace mkdet
