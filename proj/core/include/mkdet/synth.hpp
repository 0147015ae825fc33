#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mkdet/dataio.hpp"
#include "mkdet/image.hpp"
#include "mkdet/rng.hpp"

namespace mkdet {

/// Parameters of the synthetic sign-scene generator.
///
/// Subclass recipes: 1 triangle with a thick rim and a pictogram, 2 circle
/// with a striped diagonal bar, 3 diamond (optionally crossed by the same
/// bar), 4 square with a border and an inner symbol, 5 circle with a thick
/// rim and two digit strokes.
struct SynthConfig {
  std::size_t n_scenes = 10;
  int width = 256;
  int height = 192;
  int min_signs = 1;
  int max_signs = 3;
  int min_sign_size = 24;
  int max_sign_size = 56;
  double noise = 0.02;  // std-dev of additive Gaussian pixel noise
  int clutter = 12;     // background structures per scene
  std::uint64_t seed = 1;
  Split split = Split::train;
  std::string prefix = "scene";
  unsigned threads = 1;

  void validate() const;
};

struct PlacementRecord {
  std::size_t scene = 0;
  Rect bbox;
  int subclass = 0;
  int variant = 0;
};

struct SynthResult {
  DatasetManifest manifest;
  std::vector<PlacementRecord> placements;  // appended as each sign is placed
  std::vector<int> requested;               // signs requested per scene
};

inline constexpr int kSignVariants = 3;

/// Writes `<prefix>_NNNN.png` scenes and `manifest.csv` into out_dir.
SynthResult synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// Renders one scene with `subclasses.size()` signs; placements are appended
/// to `log` in drawing order.
GrayImage render_scene(const SynthConfig& cfg, std::size_t scene_index, const std::vector<int>& subclasses,
                       std::vector<PlacementRecord>& log);

/// Draws a sign of the given subclass and variant into `box` (anti-aliased,
/// composited over the existing canvas).
void render_sign(GrayImage& canvas, const Rect& box, int subclass, int variant, Rng& rng);

/// A sign centred on a flat background, convenient for tests.
GrayImage render_sign_patch(int subclass, int variant, int size, double background, std::uint64_t seed);

}  // namespace mkdet
