#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mkdet/clustering.hpp"
#include "mkdet/detect.hpp"
#include "mkdet/eval.hpp"
#include "mkdet/family.hpp"
#include "mkdet/trainer.hpp"
#include "run_config.hpp"

namespace mkdet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNotConverged = 4;

/// Writes the train and test scene sets with their manifests.
void run_synth(const RunConfig& cfg, std::ostream& log);

/// Samples patches, extracts HOG features, runs bootstrap training and
/// saves the model (also when training did not converge).
BootstrapResult run_train(const RunConfig& cfg, std::ostream& log);

struct ClusterOutput {
  DetectorFamily family;
  DetectorFamily representatives;
  KSelectReport report;
  SharingReport sharing;
};

/// Folds the saved model into its detector family and, when clustering is
/// enabled, keeps the medoid detectors.
ClusterOutput run_cluster(const RunConfig& cfg, std::ostream& log);

/// Scans every test scene with the representative family.
std::vector<Detection> run_detect(const RunConfig& cfg, std::ostream& log);

/// Scores the saved detections against the test manifest.
Metrics run_eval(const RunConfig& cfg, std::ostream& log);

/// Runs one command (synth, train, cluster, detect, eval or pipeline) and
/// returns its exit code. Library errors propagate as exceptions.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

/// HOG descriptors of a patch list, computed in parallel.
std::vector<std::vector<double>> hog_features(const std::vector<const GrayImage*>& patches, const HogConfig& hog,
                                             unsigned threads);

}  // namespace mkdet::cli
