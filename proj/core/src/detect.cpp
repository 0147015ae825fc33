#include "mkdet/detect.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mkdet/error.hpp"
#include "mkdet/parallel.hpp"

namespace mkdet {
namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t a) {
  while (parent[a] != a) a = parent[a] = parent[parent[a]];
  return a;
}

std::string shortest(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

template <class T>
T parse_field(const std::string& s, std::size_t line) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw DataError("detections line " + std::to_string(line) + ": bad field '" + s + "'");
  }
  return v;
}

}  // namespace

void ScanConfig::validate() const {
  if (window < 1) throw ConfigError("detect: window must be >= 1");
  if (stride < 1) throw ConfigError("detect: stride must be >= 1");
  if (!(scale_factor > 1.0)) throw ConfigError("detect: scale_factor must be > 1");
  if (min_size < 0 || max_size < 0) throw ConfigError("detect: object sizes must be >= 0");
  if (max_size > 0 && max_size < std::max(min_size, window)) {
    throw ConfigError("detect: max_size is below the smallest scannable size");
  }
}

WindowScore classify_window(std::span<const double> x, const DetectorFamily& family) {
  if (family.empty()) throw DataError("classify_window: empty family");
  if (x.size() != family.dim()) throw DataError("classify_window: feature length mismatch");
  WindowScore best{family.detectors[0].response(x), 0};
  for (std::size_t k = 1; k < family.size(); ++k) {
    const auto& d = family.detectors[k];
    const double r = d.response(x);
    if (r > best.score || (r == best.score && d.fg_index < family.detectors[best.winner].fg_index)) {
      best = {r, k};
    }
  }
  return best;
}

std::vector<PyramidLevel> pyramid_levels(int width, int height, const ScanConfig& cfg) {
  cfg.validate();
  std::vector<PyramidLevel> levels;
  for (int l = 0;; ++l) {
    const double s = std::pow(cfg.scale_factor, l);
    const int w = static_cast<int>(std::lround(width / s));
    const int h = static_cast<int>(std::lround(height / s));
    if (w < cfg.window || h < cfg.window) break;
    const double object = cfg.window * s;
    if (cfg.max_size > 0 && object > cfg.max_size + 1e-9) break;
    if (object + 1e-9 < cfg.min_size) continue;
    levels.push_back({w, h, s});
  }
  return levels;
}

std::size_t level_window_count(int width, int height, const ScanConfig& cfg) {
  if (width < cfg.window || height < cfg.window) return 0;
  const auto nx = static_cast<std::size_t>((width - cfg.window) / cfg.stride + 1);
  const auto ny = static_cast<std::size_t>((height - cfg.window) / cfg.stride + 1);
  return nx * ny;
}

ScanResult scan_image(const GrayImage& image, const DetectorFamily& family, const ScanConfig& cfg,
                      const HogConfig& hog) {
  cfg.validate();
  if (hog.window != cfg.window) throw ConfigError("detect: window must match the HOG window");
  if (image.width < cfg.window || image.height < cfg.window) {
    throw DataError("scan_image: image smaller than the detection window");
  }
  if (family.empty()) throw DataError("scan_image: empty family");
  const std::size_t dim = hog_dim(hog);
  if (family.dim() != dim) throw DataError("scan_image: family dimension does not match the HOG layout");

  ScanResult result;
  for (const PyramidLevel& level : pyramid_levels(image.width, image.height, cfg)) {
    const GrayImage scaled = level.scale == 1.0
                                 ? image
                                 : resample_bilinear(image, {0, 0, image.width, image.height}, level.width,
                                                     level.height);
    const int nx = (level.width - cfg.window) / cfg.stride + 1;
    const int ny = (level.height - cfg.window) / cfg.stride + 1;
    result.windows += static_cast<std::size_t>(nx) * ny;
    const double fx = static_cast<double>(image.width) / level.width;
    const double fy = static_cast<double>(image.height) / level.height;

    std::vector<std::vector<Detection>> rows(static_cast<std::size_t>(ny));
    parallel_for(rows.size(), cfg.threads, [&](std::size_t row) {
      std::vector<double> feature(dim);
      const int y = static_cast<int>(row) * cfg.stride;
      for (int xi = 0; xi < nx; ++xi) {
        const int x = xi * cfg.stride;
        compute_hog_window(scaled, x, y, hog, feature);
        const WindowScore ws = classify_window(feature, family);
        if (!(ws.score > cfg.score_threshold) || !(ws.score > 0.0)) continue;
        Rect box;
        box.x = std::clamp(static_cast<int>(std::lround(x * fx)), 0, image.width - 1);
        box.y = std::clamp(static_cast<int>(std::lround(y * fy)), 0, image.height - 1);
        box.w = std::clamp(static_cast<int>(std::lround(cfg.window * fx)), 1, image.width - box.x);
        box.h = std::clamp(static_cast<int>(std::lround(cfg.window * fy)), 1, image.height - box.y);
        const auto& d = family.detectors[ws.winner];
        rows[row].push_back({"", box, ws.score, d.subclass, d.fg_index});
      }
    });
    for (auto& r : rows) {
      for (auto& d : r) result.detections.push_back(std::move(d));
    }
  }
  result.detections = group_detections(result.detections, cfg.min_neighbors);
  return result;
}

std::vector<Detection> group_detections(const std::vector<Detection>& dets, std::size_t min_neighbors) {
  if (min_neighbors == 0) return dets;
  const std::size_t n = dets.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (dets[a].image_id == dets[b].image_id && iou(dets[a].bbox, dets[b].bbox) >= 0.5) {
        parent[find_root(parent, a)] = find_root(parent, b);
      }
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;  // root -> members, ascending
  for (std::size_t a = 0; a < n; ++a) groups[find_root(parent, a)].push_back(a);

  std::vector<std::pair<std::size_t, Detection>> kept;  // (best member index, detection)
  for (const auto& [root, members] : groups) {
    if (members.size() < min_neighbors) continue;
    std::size_t best = members.front();
    std::map<int, std::size_t> votes;
    for (std::size_t m : members) {
      if (dets[m].score > dets[best].score) best = m;
      ++votes[dets[m].subclass];
    }
    std::size_t top = 0;
    for (const auto& [v, c] : votes) top = std::max(top, c);
    Detection out = dets[best];
    if (votes[out.subclass] != top) {
      for (const auto& [v, c] : votes) {
        if (c == top) {
          out.subclass = v;
          break;
        }
      }
    }
    kept.emplace_back(best, std::move(out));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (auto& [idx, d] : kept) out.push_back(std::move(d));
  return out;
}

void write_detections(std::ostream& out, const std::vector<Detection>& dets) {
  out << "image_id,x,y,w,h,score,subclass\n";
  for (const auto& d : dets) {
    out << d.image_id << ',' << d.bbox.x << ',' << d.bbox.y << ',' << d.bbox.w << ',' << d.bbox.h << ','
        << shortest(d.score) << ',' << d.subclass << '\n';
  }
}

std::vector<Detection> read_detections(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "image_id,x,y,w,h,score,subclass") {
    throw DataError("detections file: missing header");
  }
  std::vector<Detection> dets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
    if (f.size() != 7) throw DataError("detections line " + std::to_string(line_no) + ": expected 7 fields");
    Detection d;
    d.image_id = f[0];
    d.bbox = {parse_field<int>(f[1], line_no), parse_field<int>(f[2], line_no), parse_field<int>(f[3], line_no),
              parse_field<int>(f[4], line_no)};
    d.score = parse_field<double>(f[5], line_no);
    d.subclass = parse_field<int>(f[6], line_no);
    dets.push_back(std::move(d));
  }
  return dets;
}

void save_detections(const std::vector<Detection>& dets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write detections file " + path.string());
  write_detections(out, dets);
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open detections file " + path.string());
  return read_detections(in);
}

RgbImage annotate(const GrayImage& image, std::span<const Detection> dets) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 5> kColours{{
      {230, 40, 40}, {40, 160, 230}, {240, 200, 30}, {60, 200, 80}, {200, 60, 220}}};
  RgbImage out = RgbImage::from_gray(image);
  for (const auto& d : dets) {
    const auto& c = kColours[static_cast<std::size_t>(std::clamp(d.subclass, 1, 5) - 1)];
    out.draw_rect(d.bbox, c[0], c[1], c[2], 1);
  }
  return out;
}

}  // namespace mkdet
