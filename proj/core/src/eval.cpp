#include "mkdet/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mkdet/error.hpp"

namespace mkdet {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string pct(std::size_t num, std::size_t den) { return std::to_string(whole_percent(num, den)) + "%"; }

std::string delta_pct(std::size_t num, std::size_t den, std::size_t base_num, std::size_t base_den) {
  const long long d = whole_percent(num, den) - whole_percent(base_num, base_den);
  return (d > 0 ? "+" : "") + std::to_string(d) + "%";
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

MatchResult match_detections(std::span<const Detection> dets, std::span<const Annotation> truth,
                             double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) throw ConfigError("eval: iou threshold must be in (0, 1)");
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& p = dets[a];
    const auto& q = dets[b];
    if (p.score != q.score) return p.score > q.score;
    return std::tie(p.image_id, p.bbox.x, p.bbox.y, p.bbox.w, p.bbox.h, p.subclass) <
           std::tie(q.image_id, q.bbox.x, q.bbox.y, q.bbox.w, q.bbox.h, q.subclass);
  });

  std::map<std::string, std::vector<std::size_t>> signs_of;
  for (std::size_t t = 0; t < truth.size(); ++t) signs_of[truth[t].image_id].push_back(t);

  MatchResult r;
  r.signs.reserve(truth.size());
  for (const auto& a : truth) r.signs.push_back({a, SignStatus::missed, std::nullopt});
  for (std::size_t k : order) {
    const Detection& d = dets[k];
    std::size_t best = truth.size();
    double best_iou = -1.0;
    if (const auto it = signs_of.find(d.image_id); it != signs_of.end()) {
      for (std::size_t t : it->second) {
        if (r.signs[t].detection) continue;
        const double o = iou(d.bbox, truth[t].bbox);
        if (o > best_iou) best_iou = o, best = t;
      }
    }
    if (best < truth.size() && best_iou >= iou_threshold) {
      r.signs[best].detection = d;
      r.signs[best].status =
          d.subclass == truth[best].subclass ? SignStatus::detected_correct : SignStatus::detected_misclassified;
    } else {
      r.false_positives.push_back(d);
    }
  }
  return r;
}

Metrics compute_metrics(const MatchResult& m, std::size_t n_signs, std::size_t n_images) {
  if (n_signs == 0) throw DataError("eval: no ground-truth signs");
  if (n_images == 0) throw DataError("eval: no images");
  Metrics out;
  out.n_signs = n_signs;
  out.n_images = n_images;
  out.false_positives = m.false_positives.size();
  out.per_subclass.resize(kNumSubclasses);
  for (int v = 1; v <= kNumSubclasses; ++v) out.per_subclass[static_cast<std::size_t>(v - 1)].subclass = v;
  auto slot = [&](int v) -> SubclassMetrics* {
    return (v >= 1 && v <= kNumSubclasses) ? &out.per_subclass[static_cast<std::size_t>(v - 1)] : nullptr;
  };
  for (const auto& s : m.signs) {
    SubclassMetrics* sub = slot(s.truth.subclass);
    if (sub) ++sub->signs;
    if (s.status == SignStatus::missed) continue;
    ++out.detected;
    if (sub) ++sub->detected;
    if (s.status == SignStatus::detected_correct) {
      ++out.correct;
      if (sub) ++sub->correct;
    }
  }
  for (const auto& d : m.false_positives) {
    if (SubclassMetrics* sub = slot(d.subclass)) ++sub->false_positives;
  }
  out.D = ratio(out.detected, n_signs);
  out.C = ratio(out.correct, n_signs);
  out.FP = ratio(out.false_positives, n_signs);
  out.FP_per_image = ratio(out.false_positives, n_images);
  for (auto& sub : out.per_subclass) {
    sub.D = ratio(sub.detected, sub.signs);
    sub.C = ratio(sub.correct, sub.signs);
    sub.FP = ratio(sub.false_positives, sub.signs);
    sub.fp_share = ratio(sub.false_positives, out.false_positives);
  }
  return out;
}

Metrics evaluate(std::span<const Detection> dets, const DatasetManifest& truth, double iou_threshold) {
  std::set<std::string> known;
  for (const auto& img : truth.images) known.insert(img.image_id);
  for (const auto& d : dets) {
    if (!known.count(d.image_id)) throw DataError("eval: detection for unknown image '" + d.image_id + "'");
  }
  const MatchResult m = match_detections(dets, truth.annotations, iou_threshold);
  return compute_metrics(m, truth.annotations.size(), truth.images.size());
}

long long whole_percent(std::size_t num, std::size_t den) {
  if (den == 0) return 0;
  const unsigned long long scaled = static_cast<unsigned long long>(num) * 100ULL;
  unsigned long long q = scaled / den;
  const unsigned long long r = scaled % den;
  if (2 * r > den || (2 * r == den && q % 2 == 1)) ++q;
  return static_cast<long long>(q);
}

std::string format_report(const Metrics& m, const std::string& run_name, const Metrics* baseline,
                          const std::string& baseline_name) {
  std::ostringstream out;
  out << "run: " << run_name << "  signs: " << m.n_signs << "  images: " << m.n_images << '\n';
  if (baseline) out << "baseline: " << (baseline_name.empty() ? "baseline" : baseline_name) << '\n';
  const std::size_t w = 9;
  out << pad("", 12) << pad("D", w);
  if (baseline) out << pad("dD", w);
  out << pad("C", w);
  if (baseline) out << pad("dC", w);
  out << pad("FP", w);
  if (baseline) out << pad("dFP", w);
  out << pad("FP/I", w);
  if (baseline) out << pad("dFP/I", w);
  out << '\n' << pad("all", 12) << pad(pct(m.detected, m.n_signs), w);
  if (baseline) out << pad(delta_pct(m.detected, m.n_signs, baseline->detected, baseline->n_signs), w);
  out << pad(pct(m.correct, m.n_signs), w);
  if (baseline) out << pad(delta_pct(m.correct, m.n_signs, baseline->correct, baseline->n_signs), w);
  out << pad(pct(m.false_positives, m.n_signs), w);
  if (baseline) {
    out << pad(delta_pct(m.false_positives, m.n_signs, baseline->false_positives, baseline->n_signs), w);
  }
  out << pad(pct(m.false_positives, m.n_images), w);
  if (baseline) {
    out << pad(delta_pct(m.false_positives, m.n_images, baseline->false_positives, baseline->n_images), w);
  }
  out << "\n\nper subclass" << '\n' << pad("", 12) << pad("signs", w) << pad("D", w) << pad("C", w)
      << pad("FP", w) << pad("FP share", w) << '\n';
  for (const auto& s : m.per_subclass) {
    out << pad("subclass " + std::to_string(s.subclass), 12) << pad(std::to_string(s.signs), w)
        << pad(pct(s.detected, s.signs), w) << pad(pct(s.correct, s.signs), w)
        << pad(pct(s.false_positives, s.signs), w) << pad(pct(s.false_positives, m.false_positives), w) << '\n';
  }
  return out.str();
}

std::string metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["n_signs"] = m.n_signs;
  j["n_images"] = m.n_images;
  j["detected"] = m.detected;
  j["correct"] = m.correct;
  j["false_positives"] = m.false_positives;
  j["D"] = m.D;
  j["C"] = m.C;
  j["FP"] = m.FP;
  j["FP_per_image"] = m.FP_per_image;
  j["per_subclass"] = nlohmann::ordered_json::array();
  for (const auto& s : m.per_subclass) {
    nlohmann::ordered_json e;
    e["subclass"] = s.subclass;
    e["signs"] = s.signs;
    e["detected"] = s.detected;
    e["correct"] = s.correct;
    e["false_positives"] = s.false_positives;
    e["D"] = s.D;
    e["C"] = s.C;
    e["FP"] = s.FP;
    e["fp_share"] = s.fp_share;
    j["per_subclass"].push_back(e);
  }
  return j.dump(2);
}

std::optional<Metrics> metrics_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    Metrics m;
    m.n_signs = j.at("n_signs").get<std::size_t>();
    m.n_images = j.at("n_images").get<std::size_t>();
    m.detected = j.at("detected").get<std::size_t>();
    m.correct = j.at("correct").get<std::size_t>();
    m.false_positives = j.at("false_positives").get<std::size_t>();
    m.D = j.at("D").get<double>();
    m.C = j.at("C").get<double>();
    m.FP = j.at("FP").get<double>();
    m.FP_per_image = j.at("FP_per_image").get<double>();
    for (const auto& e : j.at("per_subclass")) {
      SubclassMetrics s;
      s.subclass = e.at("subclass").get<int>();
      s.signs = e.at("signs").get<std::size_t>();
      s.detected = e.at("detected").get<std::size_t>();
      s.correct = e.at("correct").get<std::size_t>();
      s.false_positives = e.at("false_positives").get<std::size_t>();
      s.D = e.at("D").get<double>();
      s.C = e.at("C").get<double>();
      s.FP = e.at("FP").get<double>();
      s.fp_share = e.at("fp_share").get<double>();
      m.per_subclass.push_back(s);
    }
    return m;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace mkdet
