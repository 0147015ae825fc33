#include "stages.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mkdet/error.hpp"
#include "mkdet/model_io.hpp"
#include "mkdet/parallel.hpp"
#include "mkdet/synth.hpp"

namespace mkdet::cli {
namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw DataError(what + " not found: " + p.string());
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<std::vector<double>> hog_features(const std::vector<const GrayImage*>& patches, const HogConfig& hog,
                                             unsigned threads) {
  std::vector<std::vector<double>> out(patches.size());
  parallel_for(patches.size(), threads, [&](std::size_t k) { out[k] = compute_hog(*patches[k], hog).values; });
  return out;
}

void run_synth(const RunConfig& cfg, std::ostream& log) {
  const fs::path train_dir = cfg.paths.resolve(cfg.paths.train_dir);
  const fs::path test_dir = cfg.paths.resolve(cfg.paths.test_dir);
  fs::create_directories(train_dir);
  fs::create_directories(test_dir);
  const SynthResult train = synth_dataset(cfg.synth_train, train_dir);
  const SynthResult test = synth_dataset(cfg.synth_test, test_dir);
  check_disjoint(train.manifest, test.manifest);
  log << "synth: train " << train.manifest.images.size() << " scenes, " << train.manifest.annotations.size()
      << " signs -> " << cfg.paths.train_manifest().string() << '\n';
  log << "synth: test " << test.manifest.images.size() << " scenes, " << test.manifest.annotations.size()
      << " signs -> " << cfg.paths.test_manifest().string() << '\n';
}

BootstrapResult run_train(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.paths.train_manifest(), "train manifest");
  const DatasetManifest manifest = load_manifest(cfg.paths.train_manifest());
  const TrainingSets sets = sample_training_sets(manifest, cfg.sampling);

  std::vector<const GrayImage*> fg_patches, neg_patches;
  for (const auto& p : sets.foregrounds) fg_patches.push_back(&p.patch);
  for (const auto& p : sets.negatives) neg_patches.push_back(&p.patch);
  auto fg_features = hog_features(fg_patches, cfg.hog, cfg.threads);
  auto negatives = hog_features(neg_patches, cfg.hog, cfg.threads);

  std::vector<std::pair<std::vector<double>, int>> foregrounds;
  for (std::size_t k = 0; k < fg_features.size(); ++k) {
    foregrounds.emplace_back(std::move(fg_features[k]), sets.foregrounds[k].subclass);
  }
  log << "train: " << foregrounds.size() << " foregrounds, " << negatives.size() << " pool negatives, "
      << negative_combination_count(negatives.size(), foregrounds.size()) << " (negative, index) combinations\n";

  BootstrapResult result = bootstrap_train(foregrounds, negatives, cfg.bootstrap);
  for (const auto& r : result.rounds) {
    log << "train: round " << r.round << " negatives=" << r.negatives << " eta=" << r.eta;
    if (r.cv_accuracy >= 0.0) log << " cv_accuracy=" << r.cv_accuracy;
    log << " svs=" << r.support_vectors << " false_positives=" << r.false_positives << " added=" << r.added
        << (r.smo_converged ? "" : " smo_not_converged") << '\n';
  }
  const fs::path model_path = cfg.paths.resolve(cfg.paths.model);
  ensure_parent(model_path);
  save_model(result.model, model_path);
  log << "train: model -> " << model_path.string() << " (rounds=" << result.model.rounds_run
      << ", converged=" << (result.model.converged ? "yes" : "no") << ")\n";
  return result;
}

ClusterOutput run_cluster(const RunConfig& cfg, std::ostream& log) {
  const fs::path model_path = cfg.paths.resolve(cfg.paths.model);
  require_file(model_path, "model file");
  const SvmModel model = load_model(model_path);

  ClusterOutput out;
  out.family = build_family(model, cfg.threads);
  out.sharing = sv_sharing(out.family, kNumSubclasses);
  const fs::path family_path = cfg.paths.resolve(cfg.paths.family);
  ensure_parent(family_path);
  save_family(out.family, family_path);
  log << "cluster: family of " << out.family.size() << " detectors over " << out.family.shared_sv_count
      << " shared support vectors (" << out.sharing.cross_subclass << " used across subclasses) -> "
      << family_path.string() << '\n';

  if (cfg.cluster_enabled) {
    std::tie(out.representatives, out.report) = select_representatives(out.family, cfg.cluster);
  } else {
    out.representatives = out.family;
    out.report.family_size = out.family.size();
    out.report.selected_k = out.family.size();
    out.report.unchanged = true;
  }
  const fs::path report_path = cfg.paths.resolve(cfg.paths.report);
  ensure_parent(report_path);
  {
    std::ofstream rep(report_path, std::ios::binary);
    if (!rep) throw DataError("cannot write report " + report_path.string());
    write_k_report(rep, out.report);
  }
  const fs::path reps_path = cfg.paths.resolve(cfg.paths.representatives);
  ensure_parent(reps_path);
  save_family(out.representatives, reps_path);
  if (out.report.unchanged) log << "cluster: warning: family kept unchanged\n";
  if (out.report.zero_vectors > 0) log << "cluster: warning: " << out.report.zero_vectors << " all-zero detectors\n";
  log << "cluster: selected k=" << out.representatives.size() << " of " << out.family.size() << " (ratio "
      << static_cast<double>(out.representatives.size()) / static_cast<double>(out.family.size())
      << ", reference ~0.30) -> " << reps_path.string() << '\n';
  return out;
}

std::vector<Detection> run_detect(const RunConfig& cfg, std::ostream& log) {
  const fs::path family_path = cfg.paths.resolve(cfg.cluster_enabled ? cfg.paths.representatives : cfg.paths.family);
  require_file(family_path, "family file");
  require_file(cfg.paths.test_manifest(), "test manifest");
  const DetectorFamily family = load_family(family_path);
  const DatasetManifest manifest = load_manifest(cfg.paths.test_manifest());
  const fs::path annotated = cfg.paths.resolve(cfg.paths.annotated_dir);
  if (!annotated.empty()) fs::create_directories(annotated);

  std::vector<Detection> all;
  std::size_t windows = 0;
  for (const auto& entry : manifest.images) {
    const GrayImage image = load_manifest_image(entry);
    ScanResult scan = scan_image(image, family, cfg.scan, cfg.hog);
    windows += scan.windows;
    for (auto& d : scan.detections) d.image_id = entry.image_id;
    if (!annotated.empty()) {
      write_png(annotated / fs::path(entry.image_id).filename(), annotate(image, scan.detections));
    }
    all.insert(all.end(), scan.detections.begin(), scan.detections.end());
  }
  const fs::path det_path = cfg.paths.resolve(cfg.paths.detections);
  ensure_parent(det_path);
  save_detections(all, det_path);
  log << "detect: " << manifest.images.size() << " images, " << windows << " windows, " << all.size()
      << " detections -> " << det_path.string() << '\n';
  return all;
}

Metrics run_eval(const RunConfig& cfg, std::ostream& log) {
  const fs::path det_path = cfg.paths.resolve(cfg.paths.detections);
  require_file(det_path, "detections file");
  require_file(cfg.paths.test_manifest(), "test manifest");
  const DatasetManifest manifest = load_manifest(cfg.paths.test_manifest());
  const std::vector<Detection> dets = load_detections(det_path);
  const Metrics m = evaluate(dets, manifest, cfg.eval_iou);

  std::optional<Metrics> baseline;
  std::string baseline_name;
  if (!cfg.paths.baseline_metrics.empty()) {
    const fs::path bp = cfg.paths.resolve(cfg.paths.baseline_metrics);
    const std::string text = read_text(bp);
    const auto brace = text.find('{');
    if (brace != std::string::npos) baseline = metrics_from_json(text.substr(brace));
    if (!baseline) throw DataError("baseline metrics unreadable: " + bp.string());
    baseline_name = bp.filename().string();
  }
  const std::string report =
      format_report(m, cfg.paths.detections.filename().string(), baseline ? &*baseline : nullptr, baseline_name);
  const fs::path metrics_path = cfg.paths.resolve(cfg.paths.metrics);
  ensure_parent(metrics_path);
  std::ofstream out(metrics_path, std::ios::binary);
  if (!out) throw DataError("cannot write metrics " + metrics_path.string());
  out << report << '\n' << metrics_json(m) << '\n';
  log << report;
  log << "eval: metrics -> " << metrics_path.string() << '\n';
  return m;
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  auto train_code = [](const BootstrapResult& r) {
    return r.model.converged && r.model.smo_converged ? kExitOk : kExitNotConverged;
  };
  if (command == "synth") {
    run_synth(cfg, log);
    return kExitOk;
  }
  if (command == "train") return train_code(run_train(cfg, log));
  if (command == "cluster") {
    run_cluster(cfg, log);
    return kExitOk;
  }
  if (command == "detect") {
    run_detect(cfg, log);
    return kExitOk;
  }
  if (command == "eval") {
    run_eval(cfg, log);
    return kExitOk;
  }
  if (command == "pipeline") {
    run_synth(cfg, log);
    const int code = train_code(run_train(cfg, log));
    run_cluster(cfg, log);
    run_detect(cfg, log);
    run_eval(cfg, log);
    return code;
  }
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace mkdet::cli
