#include "mkdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "mkdet/error.hpp"
#include "mkdet/parallel.hpp"

namespace mkdet {
namespace {

// Sign shapes live in normalized coordinates: u to the right, v downwards,
// both in [-1, 1] over the bounding box.
struct Palette {
  double dark;   // black ink
  double rim;    // red rim as luminance
  double light;  // white face
  double mid;    // yellow/grey fills
};

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

bool in_triangle(double u, double v, double scale) {
  // Upward triangle, centroid at (0, 0.24).
  constexpr double cy = 0.24;
  const double ax = 0.0, ay = cy + (-0.92 - cy) * scale;
  const double bx = -0.98 * scale, by = cy + (0.82 - cy) * scale;
  const double cx = 0.98 * scale, cy2 = cy + (0.82 - cy) * scale;
  const double e0 = edge(ax, ay, bx, by, u, v);
  const double e1 = edge(bx, by, cx, cy2, u, v);
  const double e2 = edge(cx, cy2, ax, ay, u, v);
  return (e0 <= 0 && e1 <= 0 && e2 <= 0) || (e0 >= 0 && e1 >= 0 && e2 >= 0);
}

bool in_box(double u, double v, double u0, double v0, double u1, double v1) {
  return u >= u0 && u <= u1 && v >= v0 && v <= v1;
}

bool in_ring(double u, double v, double cu, double cv, double ru, double rv, double thickness) {
  const double du = (u - cu) / ru;
  const double dv = (v - cv) / rv;
  const double r = std::sqrt(du * du + dv * dv);
  const double t = thickness / std::min(ru, rv);
  return r <= 1.0 && r >= 1.0 - t;
}

bool diagonal_bar(double u, double v, bool striped) {
  const double s = (u + v) / std::numbers::sqrt2;
  if (std::abs(s) > 0.17) return false;
  if (!striped) return true;
  return static_cast<int>(std::floor((s + 0.17) / 0.068)) % 2 == 0;
}

std::optional<double> shade(int subclass, int variant, const Palette& p, double u, double v) {
  const double r = std::sqrt(u * u + v * v);
  switch (subclass) {
    case 1: {
      if (!in_triangle(u, v, 1.0)) return std::nullopt;
      if (!in_triangle(u, v, 0.62)) return p.rim;
      switch (variant) {
        case 0:
          if (in_box(u, v, -0.07, -0.05, 0.07, 0.38) || in_box(u, v, -0.07, 0.45, 0.07, 0.56)) return p.dark;
          break;
        case 1:
          if ((u * u + (v - 0.32) * (v - 0.32)) < 0.19 * 0.19) return p.dark;
          break;
        default:
          if (std::abs(u - 0.5 * (v - 0.3)) < 0.07 && v > 0.0 && v < 0.56) return p.dark;
          if (std::abs(u + 0.5 * (v - 0.3)) < 0.07 && v > 0.0 && v < 0.56) return p.dark;
          break;
      }
      return p.light;
    }
    case 2: {
      if (r > 0.95) return std::nullopt;
      if (r > 0.87) return p.mid;
      if (diagonal_bar(u, v, variant != 0)) return p.dark;
      return p.light;
    }
    case 3: {
      const double l1 = std::abs(u) + std::abs(v);
      if (l1 > 0.97) return std::nullopt;
      if (l1 > 0.91) return p.dark;
      if (variant == 1 && diagonal_bar(u, v, true)) return p.dark;
      if (l1 > 0.66) return p.light;
      return p.mid;
    }
    case 4: {
      const double linf = std::max(std::abs(u), std::abs(v));
      if (linf > 0.95) return std::nullopt;
      if (linf > 0.8) return p.dark;
      switch (variant) {
        case 0:  // arrow
          if (in_box(u, v, -0.09, -0.2, 0.09, 0.55)) return p.dark;
          if (v < -0.15 && v > -0.55 && std::abs(u) < 0.65 * (v + 0.55)) return p.dark;
          break;
        case 1:  // P
          if (in_box(u, v, -0.35, -0.5, -0.18, 0.55)) return p.dark;
          if (in_ring(u, v, -0.05, -0.22, 0.32, 0.28, 0.15) && u > -0.2) return p.dark;
          break;
        default:
          if (in_box(u, v, -0.5, -0.1, 0.5, 0.1)) return p.dark;
          break;
      }
      return p.light;
    }
    case 5: {
      if (r > 0.95) return std::nullopt;
      if (r > 0.66) return p.rim;
      if (in_ring(u, v, 0.2, 0.0, 0.17, 0.3, 0.075)) return p.dark;
      switch (variant) {
        case 0:
          if (in_box(u, v, -0.3, -0.3, -0.18, 0.3)) return p.dark;
          break;
        case 1:
          if (in_ring(u, v, -0.2, 0.0, 0.17, 0.3, 0.075)) return p.dark;
          break;
        default:
          if (in_box(u, v, -0.38, -0.3, -0.08, -0.22) || in_box(u, v, -0.38, -0.3, -0.3, 0.0) ||
              (in_ring(u, v, -0.22, 0.13, 0.16, 0.17, 0.075) && u > -0.3)) {
            return p.dark;
          }
          break;
      }
      return p.light;
    }
    default:
      throw DataError("unknown subclass " + std::to_string(subclass));
  }
}

void fill_rect(GrayImage& img, int x0, int y0, int x1, int y1, double value) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width);
  y1 = std::min(y1, img.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) img.at(x, y) = value;
  }
}

void draw_line(GrayImage& img, double x0, double y0, double x1, double y1, double half_width, double value) {
  const int bx0 = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - half_width)));
  const int bx1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(x0, x1) + half_width)));
  const int by0 = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - half_width)));
  const int by1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(y0, y1) + half_width)));
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = std::max(dx * dx + dy * dy, 1e-12);
  for (int y = by0; y <= by1; ++y) {
    for (int x = bx0; x <= bx1; ++x) {
      const double t = std::clamp(((x - x0) * dx + (y - y0) * dy) / len2, 0.0, 1.0);
      const double ex = x0 + t * dx - x, ey = y0 + t * dy - y;
      if (ex * ex + ey * ey <= half_width * half_width) img.at(x, y) = value;
    }
  }
}

void draw_background(GrayImage& img, const SynthConfig& cfg, Rng& rng) {
  const double base = rng.uniform(0.3, 0.7);
  const double gx = rng.uniform(-0.2, 0.2);
  const double gy = rng.uniform(-0.2, 0.2);
  struct Blob {
    double x, y, s, a;
  };
  std::vector<Blob> blobs(6);
  for (auto& b : blobs) {
    b = {rng.uniform(0, img.width), rng.uniform(0, img.height), rng.uniform(15, 50), rng.uniform(-0.15, 0.15)};
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double v = base + gx * (x / double(img.width) - 0.5) + gy * (y / double(img.height) - 0.5);
      for (const auto& b : blobs) {
        const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
        v += b.a * std::exp(-d2 / (2 * b.s * b.s));
      }
      img.at(x, y) = v;
    }
  }
  for (int c = 0; c < cfg.clutter; ++c) {
    const double value = rng.uniform(0.05, 0.95);
    switch (rng.index(4)) {
      case 0: {  // filled block
        const int w = rng.range(6, 60), h = rng.range(6, 60);
        const int x = rng.range(-w / 2, img.width - w / 2), y = rng.range(-h / 2, img.height - h / 2);
        fill_rect(img, x, y, x + w, y + h, value);
        break;
      }
      case 1: {  // window grid on a facade
        const int cols = rng.range(2, 5), rows = rng.range(2, 4);
        const int cw = rng.range(4, 10), ch = rng.range(5, 12), gap = rng.range(3, 8);
        const int x = rng.range(0, std::max(0, img.width - cols * (cw + gap)));
        const int y = rng.range(0, std::max(0, img.height - rows * (ch + gap)));
        for (int r = 0; r < rows; ++r) {
          for (int k = 0; k < cols; ++k) {
            fill_rect(img, x + k * (cw + gap), y + r * (ch + gap), x + k * (cw + gap) + cw,
                      y + r * (ch + gap) + ch, value);
          }
        }
        break;
      }
      case 2: {  // pole or wire
        const double x0 = rng.uniform(0, img.width), y0 = rng.uniform(0, img.height);
        const double ang = rng.uniform(0, std::numbers::pi);
        const double len = rng.uniform(20, 160);
        draw_line(img, x0, y0, x0 + len * std::cos(ang), y0 + len * std::sin(ang), rng.uniform(0.6, 2.5), value);
        break;
      }
      default: {  // foliage-like speckle patch
        const int w = rng.range(10, 50), h = rng.range(10, 50);
        const int x = rng.range(0, img.width - 1), y = rng.range(0, img.height - 1);
        for (int k = 0; k < w * h / 6; ++k) {
          const int px = x + rng.range(0, w), py = y + rng.range(0, h);
          if (px < img.width && py < img.height) img.at(px, py) = rng.uniform(0.1, 0.9);
        }
        break;
      }
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_scenes < 1) throw ConfigError("synth: n_scenes must be positive");
  if (width < 1 || height < 1) throw ConfigError("synth: scene size must be positive");
  if (min_signs < 0 || max_signs < min_signs) throw ConfigError("synth: bad signs-per-scene range");
  if (min_sign_size < 8 || max_sign_size < min_sign_size) throw ConfigError("synth: bad sign size range");
  if (noise < 0) throw ConfigError("synth: noise must be non-negative");
  if (clutter < 0) throw ConfigError("synth: clutter must be non-negative");
}

void render_sign(GrayImage& canvas, const Rect& box, int subclass, int variant, Rng& rng) {
  const double gain = rng.uniform(0.85, 1.1);
  const double offset = rng.uniform(-0.06, 0.04);
  auto tone = [&](double v) { return std::clamp(v * gain + offset, 0.0, 1.0); };
  const Palette p{tone(0.1), tone(0.32), tone(0.93), tone(0.5)};

  constexpr int kSuper = 4;
  for (int y = box.y; y < box.bottom(); ++y) {
    for (int x = box.x; x < box.right(); ++x) {
      if (x < 0 || y < 0 || x >= canvas.width || y >= canvas.height) continue;
      double acc = 0.0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double u = 2.0 * ((x - box.x) + (sx + 0.5) / kSuper) / box.w - 1.0;
          const double v = 2.0 * ((y - box.y) + (sy + 0.5) / kSuper) / box.h - 1.0;
          acc += shade(subclass, variant, p, u, v).value_or(canvas.at(x, y));
        }
      }
      canvas.at(x, y) = acc / (kSuper * kSuper);
    }
  }
}

GrayImage render_sign_patch(int subclass, int variant, int size, double background, std::uint64_t seed) {
  GrayImage img(size, size, background);
  Rng rng(seed);
  render_sign(img, {0, 0, size, size}, subclass, variant, rng);
  return img;
}

GrayImage render_scene(const SynthConfig& cfg, std::size_t scene_index, const std::vector<int>& subclasses,
                       std::vector<PlacementRecord>& log) {
  Rng rng(derive_seed(cfg.seed, scene_index));
  GrayImage img(cfg.width, cfg.height);
  draw_background(img, cfg, rng);

  const int max_size = std::min({cfg.max_sign_size, cfg.width, cfg.height});
  if (!subclasses.empty() && max_size < cfg.min_sign_size) {
    throw DataError("scene too small to place requested signs");
  }
  std::vector<Rect> placed;
  for (int subclass : subclasses) {
    bool ok = false;
    for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
      const int side = rng.range(cfg.min_sign_size, max_size);
      const Rect r{rng.range(0, cfg.width - side), rng.range(0, cfg.height - side), side, side};
      const Rect grown{r.x - 3, r.y - 3, r.w + 6, r.h + 6};
      ok = std::none_of(placed.begin(), placed.end(),
                        [&](const Rect& q) { return intersection_area(q, grown) > 0; });
      if (ok) {
        const int variant = static_cast<int>(rng.index(kSignVariants));
        placed.push_back(r);
        log.push_back({scene_index, r, subclass, variant});
        render_sign(img, r, subclass, variant, rng);
      }
    }
    if (!ok) throw DataError("scene too small to place requested signs");
  }

  for (double& px : img.pixels) px = std::clamp(px + cfg.noise * rng.normal(), 0.0, 1.0);
  return img;
}

SynthResult synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  // Sign counts come from one sequential stream; subclasses are dealt round
  // robin so every subclass is equally represented.
  Rng master(derive_seed(cfg.seed, 0xC0FFEE));
  SynthResult result;
  result.requested.resize(cfg.n_scenes);
  std::vector<std::vector<int>> subclasses(cfg.n_scenes);
  int dealt = 0;
  for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
    result.requested[s] = master.range(cfg.min_signs, cfg.max_signs);
    for (int k = 0; k < result.requested[s]; ++k) subclasses[s].push_back(dealt++ % kNumSubclasses + 1);
  }

  std::vector<std::vector<PlacementRecord>> logs(cfg.n_scenes);
  std::vector<std::string> names(cfg.n_scenes);
  parallel_for(cfg.n_scenes, cfg.threads, [&](std::size_t s) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04zu.png", cfg.prefix.c_str(), s);
    names[s] = name;
    const GrayImage img = render_scene(cfg, s, subclasses[s], logs[s]);
    write_png(out_dir / names[s], img);
  });

  result.manifest.split = cfg.split;
  for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
    result.manifest.images.push_back({names[s], out_dir / names[s], cfg.width, cfg.height});
    for (const auto& rec : logs[s]) {
      result.placements.push_back(rec);
      result.manifest.annotations.push_back({names[s], rec.bbox, rec.subclass});
    }
  }
  save_manifest(result.manifest, out_dir / "manifest.csv");
  return result;
}

}  // namespace mkdet
