#include "mkdet/family.hpp"

#include <set>
#include <string>

#include "mkdet/error.hpp"
#include "mkdet/model_io.hpp"
#include "mkdet/parallel.hpp"

namespace mkdet {

double LinearDetector::response(std::span<const double> x) const { return dot(w, x) + bias; }

void DetectorFamily::validate() const {
  std::set<std::size_t> seen;
  for (const auto& d : detectors) {
    if (d.w.size() != dim()) throw DataError("family: detector weight length mismatch");
    if (d.alpha_weights.size() != shared_sv_count) throw DataError("family: alpha weight count mismatch");
    if (!seen.insert(d.fg_index).second) throw DataError("family: repeated fg index " + std::to_string(d.fg_index));
  }
}

double fold_weight(const SvmModel& model, std::size_t s, std::size_t i) {
  if (s >= model.support.size()) throw DataError("fold_weight: support index out of range");
  const auto& xi = model.fg_table.at(i).x;
  const auto& xs = model.fg_table.at(model.support[s].fg_index).x;
  return model.signed_weights[s] * k_theta(xs, xi, model.kernel);
}

LinearDetector build_detector(const SvmModel& model, std::size_t i) {
  LinearDetector d;
  d.fg_index = i;
  d.subclass = model.fg_table.at(i).subclass;
  d.bias = model.bias;
  d.w.assign(model.dim(), 0.0);
  d.alpha_weights.resize(model.support.size());
  for (std::size_t s = 0; s < model.support.size(); ++s) {
    const double a = fold_weight(model, s, i);
    d.alpha_weights[s] = a;
    const auto& xs = model.support[s].x;
    for (std::size_t j = 0; j < d.w.size(); ++j) d.w[j] += a * xs[j];
  }
  return d;
}

DetectorFamily build_family(const SvmModel& model, unsigned threads) {
  if (model.fg_table.empty()) throw DataError("build_family: empty foreground table");
  DetectorFamily family;
  family.detectors.resize(model.fg_table.size());
  parallel_for(family.detectors.size(), threads,
               [&](std::size_t i) { family.detectors[i] = build_detector(model, i); });
  family.model_hash = model_hash(model);
  family.shared_sv_count = model.support.size();
  return family;
}

SharingReport sv_sharing(const DetectorFamily& family, int n_subclasses) {
  SharingReport r;
  r.support_vectors = family.shared_sv_count;
  r.per_subclass_nonzero.assign(static_cast<std::size_t>(n_subclasses), 0);
  for (std::size_t s = 0; s < family.shared_sv_count; ++s) {
    std::set<int> used_by;
    for (const auto& d : family.detectors) {
      if (d.alpha_weights[s] != 0.0) used_by.insert(d.subclass);
    }
    for (int v : used_by) {
      if (v >= 1 && v <= n_subclasses) ++r.per_subclass_nonzero[static_cast<std::size_t>(v - 1)];
    }
    if (used_by.size() >= 2) ++r.cross_subclass;
  }
  return r;
}

}  // namespace mkdet
