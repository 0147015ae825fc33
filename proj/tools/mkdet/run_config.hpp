#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mkdet/clustering.hpp"
#include "mkdet/dataio.hpp"
#include "mkdet/detect.hpp"
#include "mkdet/hog.hpp"
#include "mkdet/synth.hpp"
#include "mkdet/trainer.hpp"

namespace mkdet::cli {

struct Paths {
  std::filesystem::path root = ".";  // base for every relative path below
  std::filesystem::path train_dir = "train";
  std::filesystem::path test_dir = "test";
  std::filesystem::path model = "model.txt";
  std::filesystem::path family = "family.txt";
  std::filesystem::path representatives = "representatives.txt";
  std::filesystem::path report = "k_report.csv";
  std::filesystem::path detections = "detections.csv";
  std::filesystem::path metrics = "metrics.txt";
  std::filesystem::path annotated_dir;     // empty: no annotated images
  std::filesystem::path baseline_metrics;  // empty: no baseline column

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path train_manifest() const { return resolve(train_dir) / "manifest.csv"; }
  std::filesystem::path test_manifest() const { return resolve(test_dir) / "manifest.csv"; }
};

struct RunConfig {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Paths paths;
  SynthConfig synth_train;  // n_scenes from synth.train_scenes
  SynthConfig synth_test;   // n_scenes from synth.test_scenes
  SamplingConfig sampling;
  HogConfig hog;
  BootstrapConfig bootstrap;
  KSelectConfig cluster;
  bool cluster_enabled = true;
  ScanConfig scan;
  double eval_iou = 0.5;

  /// Checks every nested invariant; throws ConfigError.
  void validate() const;
};

/// Per-stage seed streams derived from the global seed.
enum class SeedStream : std::uint64_t { synth_train = 1, synth_test = 2, sampling = 3, bootstrap = 4, smo = 5, cluster = 6 };
std::uint64_t stage_seed(std::uint64_t global, SeedStream stream);

/// Flat `section.key=value` lines; `#` starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies key/value pairs on top of the defaults. Unknown keys and bad
/// values throw ConfigError.
RunConfig build_run_config(const std::map<std::string, std::string>& values);

/// Reads the file (if any), applies `key=value` overrides, then validates.
RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

/// Every recognised key with its current value, sorted.
std::map<std::string, std::string> describe(const RunConfig& cfg);

}  // namespace mkdet::cli
