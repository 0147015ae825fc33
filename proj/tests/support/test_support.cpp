#include "test_support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <fstream>
#include <sstream>

namespace mkdet::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto stamp = std::to_string(std::filesystem::file_time_type::clock::now().time_since_epoch().count());
  path_ = std::filesystem::temp_directory_path() / ("mkdet_" + tag + "_" + stamp + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<double> random_vector(Rng& rng, std::size_t dim, double lo, double hi) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::vector<double> random_feature(Rng& rng, std::size_t dim) { return random_vector(rng, dim, 0.0, 0.5); }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ToyProblem toy_problem(std::uint64_t seed, std::size_t n_fg, std::size_t n_neg, std::size_t dim) {
  Rng rng(seed);
  ToyProblem p;
  for (std::size_t i = 0; i < n_fg; ++i) {
    auto x = random_feature(rng, dim);
    for (std::size_t j = 0; j < dim / 2; ++j) x[j] += 0.5;  // foregrounds lean on the first half
    const int v = static_cast<int>(i % 5) + 1;
    p.table.add(x, v);
    p.samples.push_back({x, i, 1});
  }
  for (std::size_t k = 0; k < n_neg; ++k) {
    auto x = random_feature(rng, dim);
    for (std::size_t j = dim / 2; j < dim; ++j) x[j] += 0.5;
    p.samples.push_back({x, rng.index(n_fg), -1});
  }
  return p;
}

// Straightforward re-derivation of the descriptor, pixel by pixel.
std::vector<double> reference_hog(const GrayImage& p, const HogConfig& c) {
  const int n = c.window;
  const int cells = n / c.cell;
  std::vector<double> hist(static_cast<std::size_t>(cells * cells * c.bins), 0.0);
  auto at = [&](int x, int y) { return p.at(std::clamp(x, 0, n - 1), std::clamp(y, 0, n - 1)); };
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double gx = at(x + 1, y) - at(x - 1, y);
      const double gy = at(x, y + 1) - at(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      while (deg < 0.0) deg += 180.0;
      while (deg >= 180.0) deg -= 180.0;
      const double width = 180.0 / c.bins;
      const int lo = static_cast<int>(std::floor(deg / width));
      const double t = deg / width - lo;
      const int cell = (y / c.cell) * cells + x / c.cell;
      hist[static_cast<std::size_t>(cell * c.bins + lo % c.bins)] += mag * (1.0 - t);
      hist[static_cast<std::size_t>(cell * c.bins + (lo + 1) % c.bins)] += mag * t;
    }
  }
  std::vector<double> out;
  const int blocks = (cells - c.block_cells) / c.block_stride_cells + 1;
  for (int by = 0; by < blocks; ++by) {
    for (int bx = 0; bx < blocks; ++bx) {
      std::vector<double> v;
      for (int cy = 0; cy < c.block_cells; ++cy) {
        for (int cx = 0; cx < c.block_cells; ++cx) {
          const int cell = (by * c.block_stride_cells + cy) * cells + bx * c.block_stride_cells + cx;
          for (int b = 0; b < c.bins; ++b) v.push_back(hist[static_cast<std::size_t>(cell * c.bins + b)]);
        }
      }
      double sq = 0.0;
      for (double e : v) sq += e * e;
      const double s = 1.0 / std::sqrt(sq + c.epsilon * c.epsilon);
      for (double e : v) out.push_back(e * s);
    }
  }
  return out;
}

}  // namespace mkdet::testing
