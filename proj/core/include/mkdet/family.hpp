#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mkdet/trainer.hpp"

namespace mkdet {

/// w(i) . x + bias for one foreground index i.
struct LinearDetector {
  std::vector<double> w;
  double bias = 0.0;
  std::size_t fg_index = 0;
  int subclass = 0;
  std::vector<double> alpha_weights;  // alpha'_s(i), one per support vector

  double response(std::span<const double> x) const;
};

struct DetectorFamily {
  std::vector<LinearDetector> detectors;
  std::uint64_t model_hash = 0;
  std::size_t shared_sv_count = 0;

  std::size_t size() const { return detectors.size(); }
  bool empty() const { return detectors.empty(); }
  std::size_t dim() const { return detectors.empty() ? 0 : detectors.front().w.size(); }

  /// Throws DataError on ragged weights or repeated fg indices.
  void validate() const;
};

/// signed_weights[s] * k_theta(x_{fg(s)}, x_i).
double fold_weight(const SvmModel& model, std::size_t s, std::size_t i);

LinearDetector build_detector(const SvmModel& model, std::size_t i);

/// One detector per foreground entry, in table order.
DetectorFamily build_family(const SvmModel& model, unsigned threads = 1);

struct SharingReport {
  std::size_t support_vectors = 0;
  std::size_t cross_subclass = 0;  // SVs with nonzero weight in detectors of >= 2 subclasses
  std::vector<std::size_t> per_subclass_nonzero;  // index v-1: SVs used by some detector of subclass v
};

SharingReport sv_sharing(const DetectorFamily& family, int n_subclasses);

}  // namespace mkdet
