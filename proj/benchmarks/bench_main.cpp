#include <benchmark/benchmark.h>

#include "mkdet/clustering.hpp"
#include "mkdet/detect.hpp"
#include "mkdet/hog.hpp"
#include "mkdet/kernel.hpp"
#include "mkdet/rng.hpp"

namespace {

mkdet::GrayImage noise_image(int w, int h, std::uint64_t seed) {
  mkdet::Rng rng(seed);
  mkdet::GrayImage g(w, h);
  for (auto& p : g.pixels) p = rng.uniform();
  return g;
}

std::vector<double> random_vector(mkdet::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(0.0, 0.5);
  return v;
}

void BM_Hog(benchmark::State& state) {
  const auto patch = noise_image(24, 24, 1);
  const mkdet::HogConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mkdet::compute_hog(patch, cfg));
}
BENCHMARK(BM_Hog);

void BM_Gram(benchmark::State& state) {
  mkdet::Rng rng(2);
  mkdet::ForegroundTable table;
  for (int i = 0; i < 50; ++i) table.add(random_vector(rng, 900), i % 5 + 1);
  std::vector<mkdet::TrainingTuple> tuples;
  for (int t = 0; t < state.range(0); ++t) tuples.push_back({random_vector(rng, 900), rng.index(50), t % 2 ? 1 : -1});
  for (auto _ : state) benchmark::DoNotOptimize(mkdet::gram(tuples, table, {1.0, mkdet::DistanceMode::euclidean}));
}
BENCHMARK(BM_Gram)->Arg(128)->Arg(512);

void BM_ScanImage(benchmark::State& state) {
  mkdet::Rng rng(3);
  mkdet::DetectorFamily family;
  family.shared_sv_count = 1;
  for (int i = 0; i < state.range(0); ++i) {
    mkdet::LinearDetector d;
    d.fg_index = static_cast<std::size_t>(i);
    d.subclass = i % 5 + 1;
    d.w = random_vector(rng, 900);
    for (auto& w : d.w) w -= 0.25;
    d.bias = -1.0;
    d.alpha_weights = {1.0};
    family.detectors.push_back(std::move(d));
  }
  const auto img = noise_image(256, 192, 4);
  const mkdet::ScanConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mkdet::scan_image(img, family, cfg));
}
BENCHMARK(BM_ScanImage)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Pam(benchmark::State& state) {
  mkdet::Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vector(rng, 16));
  const auto dm = mkdet::DistanceMatrix::from_pairs(
      n, [&](std::size_t a, std::size_t b) { return mkdet::dist_alpha(pts[a], pts[b]); });
  for (auto _ : state) benchmark::DoNotOptimize(mkdet::pam(dm, n / 10));
}
BENCHMARK(BM_Pam)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
