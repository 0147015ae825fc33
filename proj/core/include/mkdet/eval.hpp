#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mkdet/dataio.hpp"
#include "mkdet/detect.hpp"

namespace mkdet {

enum class SignStatus { detected_correct, detected_misclassified, missed };

struct SignMatch {
  Annotation truth;
  SignStatus status = SignStatus::missed;
  std::optional<Detection> detection;
};

struct MatchResult {
  std::vector<SignMatch> signs;  // in input order
  std::vector<Detection> false_positives;
};

/// Greedy matching in descending score: each detection takes the unmatched
/// sign of the same image with the highest IoU, if that IoU reaches the
/// threshold. Equal scores are ordered by (image, box, subclass), so the
/// result does not depend on the input order.
MatchResult match_detections(std::span<const Detection> dets, std::span<const Annotation> truth,
                             double iou_threshold = 0.5);

struct SubclassMetrics {
  int subclass = 0;
  std::size_t signs = 0;
  std::size_t detected = 0;
  std::size_t correct = 0;
  std::size_t false_positives = 0;  // by the detection's subclass
  double D = 0.0;
  double C = 0.0;
  double FP = 0.0;        // false_positives / signs of this subclass
  double fp_share = 0.0;  // false_positives / all false positives
};

struct Metrics {
  std::size_t n_signs = 0;
  std::size_t n_images = 0;
  std::size_t detected = 0;
  std::size_t correct = 0;
  std::size_t false_positives = 0;
  double D = 0.0;
  double C = 0.0;
  double FP = 0.0;
  double FP_per_image = 0.0;
  std::vector<SubclassMetrics> per_subclass;  // subclasses 1..kNumSubclasses
};

Metrics compute_metrics(const MatchResult& m, std::size_t n_signs, std::size_t n_images);

/// Matches detections against a whole scene manifest.
Metrics evaluate(std::span<const Detection> dets, const DatasetManifest& truth, double iou_threshold = 0.5);

/// num / den as a whole percentage, rounding halves to even.
long long whole_percent(std::size_t num, std::size_t den);

/// Text table in the D / C / FP / FP/I layout, with per-subclass rows and
/// differences against an optional baseline run.
std::string format_report(const Metrics& m, const std::string& run_name, const Metrics* baseline = nullptr,
                          const std::string& baseline_name = {});

/// Exact ratios and counts as a JSON object.
std::string metrics_json(const Metrics& m);
std::optional<Metrics> metrics_from_json(const std::string& text);

}  // namespace mkdet
