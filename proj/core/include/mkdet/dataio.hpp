#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mkdet/image.hpp"

namespace mkdet {

inline constexpr int kNumSubclasses = 5;
inline constexpr int kPatchSize = 24;
inline constexpr std::string_view kManifestHeader = "#multikernel-manifest v1";

/// A patch cropped from a scene and scaled to kPatchSize x kPatchSize.
using ImagePatch = GrayImage;

enum class Split { train, test_crops, test_scenes };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Annotation {
  std::string image_id;
  Rect bbox;
  int subclass = 0;  // 1..kNumSubclasses

  bool operator==(const Annotation&) const = default;
};

struct ImageEntry {
  std::string image_id;  // path as written in the manifest
  std::filesystem::path path;  // resolved against the manifest directory
  int width = 0;
  int height = 0;
};

struct DatasetManifest {
  std::vector<ImageEntry> images;
  std::vector<Annotation> annotations;
  Split split = Split::train;

  const ImageEntry* find_image(std::string_view image_id) const;
  std::vector<const Annotation*> annotations_for(std::string_view image_id) const;
};

/// Resolves an image path to its (width, height).
using ImageSizeProbe = std::function<std::pair<int, int>(const std::filesystem::path&)>;
/// Loads the luminance raster of a manifest image.
using ImageLoader = std::function<GrayImage(const ImageEntry&)>;

/// Manifest text format:
///
///   #multikernel-manifest v1
///   #split train
///   scene_0007.png,102,55,24,24,5
///   scene_0008.png
///
/// One annotation per `path,x,y,w,h,subclass` line. A line holding only a
/// path declares an image without annotations. Other `#` lines are comments.
DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                               const ImageSizeProbe& probe);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Throws DataError when the two manifests share an image id.
void check_disjoint(const DatasetManifest& a, const DatasetManifest& b);

ImagePatch extract_patch(const GrayImage& image, const Rect& bbox);

struct SamplingConfig {
  std::size_t n_pos_per_subclass = 200;
  std::size_t n_negatives = 4000;
  int neg_min_size = 24;
  int neg_max_size = 96;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledPatch {
  ImagePatch patch;
  int subclass = 0;
  std::string image_id;
  Rect bbox;
};

struct NegativePatch {
  ImagePatch patch;
  std::string image_id;
  Rect bbox;
};

struct TrainingSets {
  std::vector<LabeledPatch> foregrounds;  // grouped by subclass, 1..5
  std::vector<NegativePatch> negatives;
};

GrayImage load_manifest_image(const ImageEntry& entry);

/// Draws up to n_pos_per_subclass annotated signs per subclass and exactly
/// n_negatives square background crops that do not touch any annotation.
TrainingSets sample_training_sets(const DatasetManifest& manifest, const SamplingConfig& cfg,
                                  const ImageLoader& loader = load_manifest_image);

}  // namespace mkdet
