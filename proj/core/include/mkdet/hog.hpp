#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mkdet/image.hpp"

namespace mkdet {

/// HOG layout. Defaults: 24 px window, 4 px cells, 2x2-cell blocks moved
/// one cell at a time, 9 unsigned orientation bins.
struct HogConfig {
  int window = 24;
  int cell = 4;
  int block_cells = 2;
  int block_stride_cells = 1;
  int bins = 9;
  double epsilon = 1e-5;

  void validate() const;
  std::uint64_t hash() const;
};

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t provenance = 0;  // HogConfig::hash() of the producing config

  std::size_t size() const { return values.size(); }
  std::span<const double> span() const { return values; }
};

/// (blocks_x * blocks_y) * (block_cells^2 * bins).
std::size_t hog_dim(const HogConfig& cfg);

/// Descriptor of a cfg.window-square patch.
///
/// Gradients are centred differences with replicated borders. Each pixel's
/// magnitude is split linearly between the two nearest orientation bins,
/// whose centres sit at k * 180 / bins degrees. There is no spatial
/// interpolation between cells. Each block is scaled by
/// 1 / sqrt(|v|^2 + epsilon^2) and blocks are concatenated row-major.
FeatureVector compute_hog(const GrayImage& patch, const HogConfig& cfg);

/// Same descriptor for the window whose top-left corner is (x0, y0) inside a
/// larger image; pixels outside the window are never read.
void compute_hog_window(const GrayImage& image, int x0, int y0, const HogConfig& cfg, std::span<double> out);

}  // namespace mkdet
