#include <doctest.h>

#include <sstream>

#include "mkdet/dataio.hpp"
#include "mkdet/error.hpp"
#include "mkdet/synth.hpp"
#include "test_support.hpp"

using namespace mkdet;

namespace {

ImageSizeProbe fixed_size(int w, int h) {
  return [w, h](const std::filesystem::path&) { return std::pair{w, h}; };
}

DatasetManifest parse(const std::string& text, const ImageSizeProbe& probe = fixed_size(256, 192)) {
  std::istringstream in(text);
  return parse_manifest(in, "/data", probe);
}

// Independent 2x box average.
GrayImage box_downsample(const GrayImage& src) {
  GrayImage out(src.width / 2, src.height / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.at(x, y) = 0.25 * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) + src.at(2 * x, 2 * y + 1) +
                             src.at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

GrayImage random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = rng.uniform();
  return img;
}

// A training manifest with `per_subclass` signs of each subclass, laid out
// on a grid so the right half of every image stays sign-free.
DatasetManifest grid_manifest(const std::vector<int>& per_subclass) {
  DatasetManifest m;
  m.split = Split::train;
  std::size_t img = 0;
  for (std::size_t v = 0; v < per_subclass.size(); ++v) {
    for (int k = 0; k < per_subclass[v]; ++k, ++img) {
      const std::string id = "img_" + std::to_string(img) + ".png";
      m.images.push_back({id, id, 200, 100});
      m.annotations.push_back({id, {10 + k % 3, 20, 40, 40}, static_cast<int>(v) + 1});
    }
  }
  return m;
}

GrayImage loader_image(const ImageEntry& e) {
  return random_image(e.width, e.height, std::hash<std::string>{}(e.image_id));
}

}  // namespace

TEST_CASE("manifest line maps to an annotation") {
  const auto m = parse("#multikernel-manifest v1\nscene_0007.png,102,55,24,24,5\n");
  REQUIRE(m.annotations.size() == 1);
  CHECK(m.annotations[0].image_id == "scene_0007.png");
  CHECK(m.annotations[0].bbox == Rect{102, 55, 24, 24});
  CHECK(m.annotations[0].subclass == 5);
  REQUIRE(m.images.size() == 1);
  CHECK(m.images[0].path == std::filesystem::path("/data/scene_0007.png"));
}

TEST_CASE("manifest with one bare image has no annotations") {
  const auto m = parse("#multikernel-manifest v1\n#split test-scenes\nempty.png\n");
  CHECK(m.images.size() == 1);
  CHECK(m.annotations.empty());
  CHECK(m.split == Split::test_scenes);
}

TEST_CASE("manifest errors") {
  CHECK_THROWS_WITH_AS(parse("#multikernel-manifest v1\na.png,1,1,24,24,6\n"),
                       doctest::Contains("subclass out of range"), DataError);
  CHECK_THROWS_WITH_AS(parse("#multikernel-manifest v1\na.png,1,1,24\n"), doctest::Contains("malformed"),
                       DataError);
  CHECK_THROWS_AS(parse("a.png,1,1,24,24,1\n"), DataError);
  CHECK_THROWS_WITH_AS(parse("#multikernel-manifest v1\na.png,250,1,24,24,1\n"), doctest::Contains("bbox"),
                       DataError);
  const ImageSizeProbe missing = [](const std::filesystem::path& p) -> std::pair<int, int> {
    throw DataError("missing file " + p.string());
  };
  CHECK_THROWS_WITH_AS(parse("#multikernel-manifest v1\na.png,1,1,24,24,1\n", missing),
                       doctest::Contains("unknown image"), DataError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.csv"), DataError);
}

TEST_CASE("manifest save/load round trip") {
  testing::TempDir dir("manifest");
  GrayImage img(64, 48, 0.5);
  write_png(dir / "a.png", img);
  write_png(dir / "b.png", img);
  DatasetManifest m;
  m.split = Split::test_crops;
  m.images = {{"a.png", dir / "a.png", 64, 48}, {"b.png", dir / "b.png", 64, 48}};
  m.annotations = {{"a.png", {1, 2, 30, 30}, 3}};
  save_manifest(m, dir / "manifest.csv");
  const auto back = load_manifest(dir / "manifest.csv");
  CHECK(back.split == Split::test_crops);
  REQUIRE(back.images.size() == 2);
  CHECK(back.images[1].image_id == "b.png");
  CHECK(back.images[1].width == 64);
  CHECK(back.annotations == m.annotations);
}

TEST_CASE("disjoint splits") {
  DatasetManifest a, b;
  a.images = {{"x.png", "x.png", 10, 10}};
  b.images = {{"y.png", "y.png", 10, 10}};
  CHECK_NOTHROW(check_disjoint(a, b));
  b.images.push_back({"x.png", "x.png", 10, 10});
  CHECK_THROWS_AS(check_disjoint(a, b), DataError);
}

TEST_CASE("extract_patch identity, constant and box-downsample oracle") {
  const GrayImage img = random_image(24, 24, 5);
  CHECK(extract_patch(img, {0, 0, 24, 24}) == img);

  const GrayImage flat(48, 48, 0.5);
  for (const Rect r : {Rect{0, 0, 48, 48}, Rect{3, 7, 11, 30}, Rect{40, 40, 8, 8}}) {
    const auto p = extract_patch(flat, r);
    CHECK(p.width == 24);
    CHECK(p.height == 24);
    for (double v : p.pixels) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }

  const GrayImage big = random_image(48, 48, 9);
  const auto p = extract_patch(big, {0, 0, 48, 48});
  const auto ref = box_downsample(big);
  double worst = 0.0;
  for (std::size_t k = 0; k < p.pixels.size(); ++k) worst = std::max(worst, std::abs(p.pixels[k] - ref.pixels[k]));
  CHECK(worst <= 1e-6);

  CHECK_THROWS_WITH_AS(extract_patch(big, {40, 0, 9, 9}), doctest::Contains("out of bounds"), DataError);
}

TEST_CASE("extract_patch stays in [0, 1]") {
  const GrayImage img = random_image(100, 80, 21);
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const int w = rng.range(1, 60);
    const int h = rng.range(1, 60);
    const Rect r{rng.range(0, 100 - w), rng.range(0, 80 - h), w, h};
    const auto p = extract_patch(img, r);
    CHECK(p.width == kPatchSize);
    for (double v : p.pixels) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("sampling takes all signs of a small subclass") {
  const auto m = grid_manifest({12, 9, 12, 12, 12});
  SamplingConfig cfg;
  cfg.n_pos_per_subclass = 10;
  cfg.n_negatives = 50;
  cfg.seed = 3;
  const auto sets = sample_training_sets(m, cfg, loader_image);
  std::array<int, 5> counts{};
  for (const auto& f : sets.foregrounds) ++counts[static_cast<std::size_t>(f.subclass - 1)];
  CHECK(counts == std::array<int, 5>{10, 9, 10, 10, 10});
  CHECK(sets.negatives.size() == 50);
}

TEST_CASE("sampling invariants and determinism") {
  const auto m = grid_manifest({4, 4, 4, 4, 4});
  SamplingConfig cfg;
  cfg.n_pos_per_subclass = 200;
  cfg.n_negatives = 300;
  cfg.seed = 11;
  const auto a = sample_training_sets(m, cfg, loader_image);
  const auto b = sample_training_sets(m, cfg, loader_image);
  REQUIRE(a.foregrounds.size() == 20);
  REQUIRE(a.negatives.size() == b.negatives.size());
  for (std::size_t k = 0; k < a.negatives.size(); ++k) {
    CHECK(a.negatives[k].bbox == b.negatives[k].bbox);
    CHECK(a.negatives[k].patch == b.negatives[k].patch);
    CHECK(a.negatives[k].patch.width == kPatchSize);
    CHECK(a.negatives[k].bbox.w >= cfg.neg_min_size);
    CHECK(a.negatives[k].bbox.w <= cfg.neg_max_size);
    for (const auto* ann : m.annotations_for(a.negatives[k].image_id)) {
      CHECK(intersection_area(ann->bbox, a.negatives[k].bbox) == 0);
    }
  }
  for (std::size_t k = 0; k < a.foregrounds.size(); ++k) CHECK(a.foregrounds[k].bbox == b.foregrounds[k].bbox);
}

TEST_CASE("sampling errors") {
  SamplingConfig cfg;
  cfg.n_negatives = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  SamplingConfig ok;
  ok.n_negatives = 5;
  CHECK_THROWS_WITH_AS(sample_training_sets(grid_manifest({2, 2, 0, 2, 2}), ok, loader_image),
                       doctest::Contains("subclass 3"), DataError);

  // Every image is covered by its sign: nowhere to put a negative.
  DatasetManifest full;
  full.images = {{"f.png", "f.png", 30, 30}};
  for (int v = 1; v <= 5; ++v) full.annotations.push_back({"f.png", {0, 0, 30, 30}, v});
  CHECK_THROWS_WITH_AS(sample_training_sets(full, ok, loader_image), doctest::Contains("sign-free"), DataError);

  auto test_split = grid_manifest({1, 1, 1, 1, 1});
  test_split.split = Split::test_scenes;
  CHECK_THROWS_AS(sample_training_sets(test_split, ok, loader_image), DataError);
}

TEST_CASE("synth with zero signs") {
  testing::TempDir dir("synth0");
  SynthConfig cfg;
  cfg.n_scenes = 1;
  cfg.min_signs = cfg.max_signs = 0;
  const auto r = synth_dataset(cfg, dir.path());
  CHECK(r.manifest.images.size() == 1);
  CHECK(r.manifest.annotations.empty());
  CHECK(load_manifest(dir / "manifest.csv").images.size() == 1);
}

TEST_CASE("synth is byte-deterministic") {
  testing::TempDir a("synthA"), b("synthB");
  SynthConfig cfg;
  cfg.n_scenes = 2;
  cfg.seed = 77;
  synth_dataset(cfg, a.path());
  synth_dataset(cfg, b.path());
  for (const char* f : {"scene_0000.png", "scene_0001.png", "manifest.csv"}) {
    CHECK(testing::read_file(a / f) == testing::read_file(b / f));
  }
}

TEST_CASE("synth annotations match the placement log") {
  testing::TempDir dir("synth200");
  SynthConfig cfg;
  cfg.n_scenes = 200;
  cfg.seed = 5;
  const auto r = synth_dataset(cfg, dir.path());
  std::size_t requested = 0;
  for (int n : r.requested) {
    CHECK(n >= 1);
    CHECK(n <= 3);
    requested += static_cast<std::size_t>(n);
  }
  CHECK(r.placements.size() == requested);
  REQUIRE(r.manifest.annotations.size() == r.placements.size());
  std::array<int, 5> per{};
  for (std::size_t k = 0; k < r.placements.size(); ++k) {
    const auto& p = r.placements[k];
    const auto& a = r.manifest.annotations[k];
    CHECK(a.bbox == p.bbox);
    CHECK(a.subclass == p.subclass);
    ++per[static_cast<std::size_t>(p.subclass - 1)];
  }
  for (int c : per) CHECK(c > 0);
  // Signs never overlap within a scene.
  for (std::size_t i = 0; i < r.placements.size(); ++i) {
    for (std::size_t j = i + 1; j < r.placements.size(); ++j) {
      if (r.placements[i].scene == r.placements[j].scene) {
        CHECK(intersection_area(r.placements[i].bbox, r.placements[j].bbox) == 0);
      }
    }
  }
}

TEST_CASE("synth rejects impossible placements") {
  testing::TempDir dir("synthsmall");
  SynthConfig cfg;
  cfg.n_scenes = 1;
  cfg.width = cfg.height = 40;
  cfg.min_signs = cfg.max_signs = 3;
  cfg.min_sign_size = cfg.max_sign_size = 30;
  CHECK_THROWS_WITH_AS(synth_dataset(cfg, dir.path()), doctest::Contains("scene too small"), DataError);
}

TEST_CASE("png round trip") {
  testing::TempDir dir("png");
  GrayImage img(7, 5);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) img.pixels[k] = static_cast<double>(k * 7 % 256) / 255.0;
  write_png(dir / "g.png", img);
  const auto back = read_png(dir / "g.png");
  CHECK(back == img);
  CHECK(read_png_size(dir / "g.png") == std::pair{7, 5});
  CHECK_THROWS_AS(read_png(dir / "none.png"), DataError);
}
