#include "mkdet/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mkdet/error.hpp"
#include "mkdet/rng.hpp"

namespace mkdet {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int parse_int(std::string_view field, int line_no) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError("manifest line " + std::to_string(line_no) + ": malformed integer '" +
                    std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::test_crops: return "test-crops";
    case Split::test_scenes: return "test-scenes";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test-crops") return Split::test_crops;
  if (text == "test-scenes") return Split::test_scenes;
  throw DataError("unknown split tag '" + std::string(text) + "'");
}

const ImageEntry* DatasetManifest::find_image(std::string_view image_id) const {
  for (const auto& img : images) {
    if (img.image_id == image_id) return &img;
  }
  return nullptr;
}

std::vector<const Annotation*> DatasetManifest::annotations_for(std::string_view image_id) const {
  std::vector<const Annotation*> out;
  for (const auto& a : annotations) {
    if (a.image_id == image_id) out.push_back(&a);
  }
  return out;
}

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                               const ImageSizeProbe& probe) {
  DatasetManifest manifest;
  std::map<std::string, std::size_t, std::less<>> image_index;
  std::string raw;
  int line_no = 0;
  bool header_seen = false;

  auto declare_image = [&](std::string_view id, int ln) -> const ImageEntry& {
    if (auto it = image_index.find(id); it != image_index.end()) return manifest.images[it->second];
    ImageEntry entry;
    entry.image_id = std::string(id);
    entry.path = std::filesystem::path(entry.image_id).is_absolute() ? std::filesystem::path(entry.image_id)
                                                                     : base_dir / entry.image_id;
    try {
      std::tie(entry.width, entry.height) = probe(entry.path);
    } catch (const Error& e) {
      throw DataError("manifest line " + std::to_string(ln) + ": annotation references unknown image '" +
                      entry.image_id + "' (" + e.what() + ")");
    }
    image_index.emplace(entry.image_id, manifest.images.size());
    manifest.images.push_back(std::move(entry));
    return manifest.images.back();
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kManifestHeader) {
        throw DataError("manifest line " + std::to_string(line_no) + ": missing header '" +
                        std::string(kManifestHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.front() == '#') {
      if (line.starts_with("#split ")) manifest.split = parse_split(trim(line.substr(7)));
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() == 1) {
      declare_image(fields[0], line_no);
      continue;
    }
    if (fields.size() != 6 || fields[0].empty()) {
      throw DataError("manifest line " + std::to_string(line_no) + ": malformed line, expected " +
                      "image_path,x,y,w,h,subclass");
    }
    Annotation a;
    a.image_id = std::string(fields[0]);
    a.bbox = {parse_int(fields[1], line_no), parse_int(fields[2], line_no), parse_int(fields[3], line_no),
              parse_int(fields[4], line_no)};
    a.subclass = parse_int(fields[5], line_no);
    if (a.subclass < 1 || a.subclass > kNumSubclasses) {
      throw DataError("manifest line " + std::to_string(line_no) + ": subclass out of range (" +
                      std::to_string(a.subclass) + ")");
    }
    const ImageEntry& img = declare_image(a.image_id, line_no);
    if (!contains(img.width, img.height, a.bbox)) {
      throw DataError("manifest line " + std::to_string(line_no) + ": bbox outside image bounds");
    }
    manifest.annotations.push_back(std::move(a));
  }
  if (!header_seen) throw DataError("manifest is empty: missing header");
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest file not found: " + path.string());
  return parse_manifest(in, path.parent_path(), [](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw DataError("missing file " + p.string());
    return read_png_size(p);
  });
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << kManifestHeader << '\n' << "#split " << to_string(manifest.split) << '\n';
  for (const auto& img : manifest.images) {
    const auto anns = manifest.annotations_for(img.image_id);
    if (anns.empty()) out << img.image_id << '\n';
    for (const Annotation* a : anns) {
      out << a->image_id << ',' << a->bbox.x << ',' << a->bbox.y << ',' << a->bbox.w << ',' << a->bbox.h << ','
          << a->subclass << '\n';
    }
  }
  if (!out) throw DataError("failed writing manifest: " + path.string());
}

void check_disjoint(const DatasetManifest& a, const DatasetManifest& b) {
  std::set<std::string, std::less<>> ids;
  for (const auto& img : a.images) ids.insert(img.image_id);
  for (const auto& img : b.images) {
    if (ids.contains(img.image_id)) throw DataError("splits share image '" + img.image_id + "'");
  }
}

ImagePatch extract_patch(const GrayImage& image, const Rect& bbox) {
  if (!contains(image.width, image.height, bbox)) throw DataError("bbox out of bounds");
  return resample_bilinear(image, bbox, kPatchSize, kPatchSize);
}

void SamplingConfig::validate() const {
  if (n_pos_per_subclass < 1) throw ConfigError("sampling.n_pos_per_subclass must be >= 1");
  if (n_negatives < 1) throw ConfigError("sampling.n_negatives must be >= 1");
  if (neg_min_size < 1 || neg_max_size < neg_min_size) {
    throw ConfigError("sampling negative size range is empty");
  }
}

GrayImage load_manifest_image(const ImageEntry& entry) { return read_png(entry.path); }

TrainingSets sample_training_sets(const DatasetManifest& manifest, const SamplingConfig& cfg,
                                  const ImageLoader& loader) {
  cfg.validate();
  if (manifest.split != Split::train) throw DataError("training sets must be sampled from a train split");
  if (manifest.images.empty()) throw DataError("manifest lists no images");

  Rng rng(cfg.seed);

  // Foregrounds: per subclass, a seeded permutation of the annotations.
  std::vector<const Annotation*> chosen;
  for (int v = 1; v <= kNumSubclasses; ++v) {
    std::vector<const Annotation*> pool;
    for (const auto& a : manifest.annotations) {
      if (a.subclass == v) pool.push_back(&a);
    }
    if (pool.empty()) throw DataError("subclass " + std::to_string(v) + " has no annotations");
    rng.shuffle(pool);
    pool.resize(std::min(pool.size(), cfg.n_pos_per_subclass));
    chosen.insert(chosen.end(), pool.begin(), pool.end());
  }

  // Negatives: positions are decided from geometry alone, before any pixels
  // are read.
  std::map<std::string, std::vector<Rect>, std::less<>> signs_by_image;
  for (const auto& a : manifest.annotations) signs_by_image[a.image_id].push_back(a.bbox);

  std::vector<std::pair<std::size_t, Rect>> negative_sites;
  negative_sites.reserve(cfg.n_negatives);
  const std::size_t max_attempts = 50 * cfg.n_negatives + 1000;
  std::size_t attempts = 0;
  while (negative_sites.size() < cfg.n_negatives) {
    if (++attempts > max_attempts) throw DataError("insufficient sign-free area for negative sampling");
    const std::size_t img_idx = rng.index(manifest.images.size());
    const ImageEntry& img = manifest.images[img_idx];
    const int max_side = std::min({cfg.neg_max_size, img.width, img.height});
    if (max_side < cfg.neg_min_size) continue;
    const int side = rng.range(cfg.neg_min_size, max_side);
    const Rect r{rng.range(0, img.width - side), rng.range(0, img.height - side), side, side};
    const auto it = signs_by_image.find(img.image_id);
    const bool clear = it == signs_by_image.end() ||
                       std::none_of(it->second.begin(), it->second.end(),
                                    [&](const Rect& s) { return intersection_area(s, r) > 0; });
    if (clear) negative_sites.emplace_back(img_idx, r);
  }

  // Extraction: each image is decoded once.
  TrainingSets out;
  out.foregrounds.resize(chosen.size());
  out.negatives.resize(negative_sites.size());
  std::vector<std::vector<std::size_t>> fg_by_image(manifest.images.size());
  std::vector<std::vector<std::size_t>> neg_by_image(manifest.images.size());
  std::map<std::string_view, std::size_t> index_of;
  for (std::size_t i = 0; i < manifest.images.size(); ++i) index_of[manifest.images[i].image_id] = i;
  for (std::size_t k = 0; k < chosen.size(); ++k) fg_by_image[index_of.at(chosen[k]->image_id)].push_back(k);
  for (std::size_t k = 0; k < negative_sites.size(); ++k) neg_by_image[negative_sites[k].first].push_back(k);

  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    if (fg_by_image[i].empty() && neg_by_image[i].empty()) continue;
    const ImageEntry& entry = manifest.images[i];
    const GrayImage image = loader(entry);
    if (image.width != entry.width || image.height != entry.height) {
      throw DataError("image size differs from manifest probe: " + entry.image_id);
    }
    for (std::size_t k : fg_by_image[i]) {
      const Annotation& a = *chosen[k];
      out.foregrounds[k] = {extract_patch(image, a.bbox), a.subclass, a.image_id, a.bbox};
    }
    for (std::size_t k : neg_by_image[i]) {
      const Rect& r = negative_sites[k].second;
      out.negatives[k] = {extract_patch(image, r), entry.image_id, r};
    }
  }
  return out;
}

}  // namespace mkdet
