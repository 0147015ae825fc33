#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mkdet/family.hpp"
#include "mkdet/hog.hpp"
#include "mkdet/image.hpp"

namespace mkdet {

struct ScanConfig {
  int window = 24;
  int stride = 4;
  double scale_factor = 1.2;
  int min_size = 0;  // smallest object side in original pixels; 0 = window
  int max_size = 0;  // largest object side; 0 = unbounded
  double score_threshold = 0.0;
  std::size_t min_neighbors = 0;  // 0 disables grouping
  unsigned threads = 1;

  void validate() const;
};

struct Detection {
  std::string image_id;
  Rect bbox;  // original image coordinates
  double score = 0.0;
  int subclass = 0;
  std::size_t fg_index = 0;  // foreground index of the winning detector

  bool operator==(const Detection&) const = default;
};

struct WindowScore {
  double score = 0.0;
  std::size_t winner = 0;  // position in the family
};

/// Maximum response over the family; ties go to the lowest fg_index.
WindowScore classify_window(std::span<const double> x, const DetectorFamily& family);

struct PyramidLevel {
  int width = 0;
  int height = 0;
  double scale = 1.0;  // original size / level size
};

/// Level l is the original resampled by 1 / scale_factor^l, down to the
/// last level that still fits a window (and honours min/max size).
std::vector<PyramidLevel> pyramid_levels(int width, int height, const ScanConfig& cfg);

/// Windows evaluated at one level: (floor((w - window) / stride) + 1) per axis.
std::size_t level_window_count(int width, int height, const ScanConfig& cfg);

struct ScanResult {
  std::vector<Detection> detections;  // ordered by (level, y, x)
  std::size_t windows = 0;
};

/// Every window whose best response exceeds score_threshold, then grouping
/// when min_neighbors > 0.
ScanResult scan_image(const GrayImage& image, const DetectorFamily& family, const ScanConfig& cfg,
                      const HogConfig& hog = {});

/// Clusters detections linked by IoU >= 0.5, drops clusters with fewer than
/// min_neighbors members and keeps each cluster's best-scoring member,
/// relabelled with the cluster's majority subclass.
std::vector<Detection> group_detections(const std::vector<Detection>& dets, std::size_t min_neighbors);

/// CSV with header `image_id,x,y,w,h,score,subclass`.
void write_detections(std::ostream& out, const std::vector<Detection>& dets);
std::vector<Detection> read_detections(std::istream& in);
void save_detections(const std::vector<Detection>& dets, const std::filesystem::path& path);
std::vector<Detection> load_detections(const std::filesystem::path& path);

/// Input image with one rectangle per detection, coloured by subclass.
RgbImage annotate(const GrayImage& image, std::span<const Detection> dets);

}  // namespace mkdet
