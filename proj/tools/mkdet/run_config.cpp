#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mkdet/error.hpp"

namespace mkdet::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("bad value for " + key + ": '" + text + "'");
}

template <class T>
std::string show(T v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
  }
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number(T RunConfig::*outer) {
  return {[outer](RunConfig& c, const std::string& k, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*outer = parse_bool(k, v);
            } else {
              c.*outer = parse_number<T>(k, v);
            }
          },
          [outer](const RunConfig& c) { return show(c.*outer); }};
}

template <class S, class T>
Field number(S RunConfig::*section, T S::*member) {
  return {[section, member](RunConfig& c, const std::string& k, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*section.*member = parse_bool(k, v);
            } else {
              c.*section.*member = parse_number<T>(k, v);
            }
          },
          [section, member](const RunConfig& c) { return show(c.*section.*member); }};
}

Field path(std::filesystem::path Paths::*member) {
  return {[member](RunConfig& c, const std::string&, const std::string& v) { c.paths.*member = v; },
          [member](const RunConfig& c) { return (c.paths.*member).string(); }};
}

// Keys applying to both synthetic splits.
template <class T>
Field synth_both(T SynthConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            c.synth_train.*member = c.synth_test.*member = parse_number<T>(k, v);
          },
          [member](const RunConfig& c) { return show(c.synth_train.*member); }};
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + show(x);
  return s;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["seed"] = number(&RunConfig::seed);
    f["threads"] = number(&RunConfig::threads);

    f["paths.root"] = path(&Paths::root);
    f["paths.train_dir"] = path(&Paths::train_dir);
    f["paths.test_dir"] = path(&Paths::test_dir);
    f["paths.model"] = path(&Paths::model);
    f["paths.family"] = path(&Paths::family);
    f["paths.representatives"] = path(&Paths::representatives);
    f["paths.report"] = path(&Paths::report);
    f["paths.detections"] = path(&Paths::detections);
    f["paths.metrics"] = path(&Paths::metrics);
    f["paths.annotated_dir"] = path(&Paths::annotated_dir);
    f["paths.baseline_metrics"] = path(&Paths::baseline_metrics);

    f["synth.train_scenes"] = number(&RunConfig::synth_train, &SynthConfig::n_scenes);
    f["synth.test_scenes"] = number(&RunConfig::synth_test, &SynthConfig::n_scenes);
    f["synth.width"] = synth_both(&SynthConfig::width);
    f["synth.height"] = synth_both(&SynthConfig::height);
    f["synth.min_signs"] = synth_both(&SynthConfig::min_signs);
    f["synth.max_signs"] = synth_both(&SynthConfig::max_signs);
    f["synth.min_sign_size"] = synth_both(&SynthConfig::min_sign_size);
    f["synth.max_sign_size"] = synth_both(&SynthConfig::max_sign_size);
    f["synth.noise"] = synth_both(&SynthConfig::noise);
    f["synth.clutter"] = synth_both(&SynthConfig::clutter);

    f["sampling.n_pos_per_subclass"] = number(&RunConfig::sampling, &SamplingConfig::n_pos_per_subclass);
    f["sampling.n_negatives"] = number(&RunConfig::sampling, &SamplingConfig::n_negatives);
    f["sampling.neg_min_size"] = number(&RunConfig::sampling, &SamplingConfig::neg_min_size);
    f["sampling.neg_max_size"] = number(&RunConfig::sampling, &SamplingConfig::neg_max_size);

    f["hog.window"] = number(&RunConfig::hog, &HogConfig::window);
    f["hog.cell"] = number(&RunConfig::hog, &HogConfig::cell);
    f["hog.block_cells"] = number(&RunConfig::hog, &HogConfig::block_cells);
    f["hog.block_stride_cells"] = number(&RunConfig::hog, &HogConfig::block_stride_cells);
    f["hog.bins"] = number(&RunConfig::hog, &HogConfig::bins);
    f["hog.epsilon"] = number(&RunConfig::hog, &HogConfig::epsilon);

    f["kernel.distance"] = {
        [](RunConfig& c, const std::string&, const std::string& v) { c.bootstrap.distance = parse_distance_mode(v); },
        [](const RunConfig& c) { return std::string(to_string(c.bootstrap.distance)); }};

    f["smo.C"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                    c.bootstrap.smo.C = parse_number<double>(k, v);
                  },
                  [](const RunConfig& c) { return show(c.bootstrap.smo.C); }};
    f["smo.kkt_tol"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                          c.bootstrap.smo.kkt_tol = parse_number<double>(k, v);
                        },
                        [](const RunConfig& c) { return show(c.bootstrap.smo.kkt_tol); }};
    f["smo.max_passes"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                             c.bootstrap.smo.max_passes = parse_number<std::size_t>(k, v);
                           },
                           [](const RunConfig& c) { return show(c.bootstrap.smo.max_passes); }};
    f["smo.no_bias"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                          c.bootstrap.smo.fit_bias = !parse_bool(k, v);
                        },
                        [](const RunConfig& c) { return show(!c.bootstrap.smo.fit_bias); }};

    f["bootstrap.max_rounds"] = number(&RunConfig::bootstrap, &BootstrapConfig::max_rounds);
    f["bootstrap.per_round_fp_cap"] = number(&RunConfig::bootstrap, &BootstrapConfig::per_round_fp_cap);
    f["bootstrap.initial_negatives"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.bootstrap.initial_negatives = v == "all" ? kAllNegatives : parse_number<std::size_t>(k, v);
        },
        [](const RunConfig& c) {
          return c.bootstrap.initial_negatives == kAllNegatives ? std::string("all")
                                                                 : show(c.bootstrap.initial_negatives);
        }};
    f["bootstrap.eta_grid"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                                 std::vector<double> grid;
                                 std::stringstream ss(v);
                                 for (std::string part; std::getline(ss, part, ',');) {
                                   grid.push_back(parse_number<double>(k, trim(part)));
                                 }
                                 c.bootstrap.eta_grid = std::move(grid);
                               },
                               [](const RunConfig& c) { return join_reals(c.bootstrap.eta_grid); }};
    f["bootstrap.cv_folds"] = number(&RunConfig::bootstrap, &BootstrapConfig::cv_folds);
    f["bootstrap.mining"] = {
        [](RunConfig& c, const std::string&, const std::string& v) { c.bootstrap.mining = parse_mining_mode(v); },
        [](const RunConfig& c) { return std::string(to_string(c.bootstrap.mining)); }};
    f["bootstrap.gram_dense_limit"] = number(&RunConfig::bootstrap, &BootstrapConfig::gram_dense_limit);

    f["cluster.enabled"] = number(&RunConfig::cluster_enabled);
    f["cluster.start_fraction"] = number(&RunConfig::cluster, &KSelectConfig::start_fraction);
    f["cluster.decay"] = number(&RunConfig::cluster, &KSelectConfig::decay);
    f["cluster.k_min"] = number(&RunConfig::cluster, &KSelectConfig::k_min);

    f["detect.stride"] = number(&RunConfig::scan, &ScanConfig::stride);
    f["detect.scale_factor"] = number(&RunConfig::scan, &ScanConfig::scale_factor);
    f["detect.min_size"] = number(&RunConfig::scan, &ScanConfig::min_size);
    f["detect.max_size"] = number(&RunConfig::scan, &ScanConfig::max_size);
    f["detect.score_threshold"] = number(&RunConfig::scan, &ScanConfig::score_threshold);
    f["detect.min_neighbors"] = number(&RunConfig::scan, &ScanConfig::min_neighbors);

    f["eval.iou"] = number(&RunConfig::eval_iou);
    return f;
  }();
  return table;
}

RunConfig defaults() {
  RunConfig c;
  c.synth_train.n_scenes = 200;
  c.synth_train.split = Split::train;
  c.synth_train.prefix = "train";
  c.synth_test.n_scenes = 200;
  c.synth_test.split = Split::test_scenes;
  c.synth_test.prefix = "test";
  c.cluster.k_min = std::max<std::size_t>(5, kNumSubclasses);
  return c;
}

}  // namespace

std::filesystem::path Paths::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() || p.empty() ? p : root / p;
}

std::uint64_t stage_seed(std::uint64_t global, SeedStream stream) {
  return derive_seed(global, static_cast<std::uint64_t>(stream));
}

void RunConfig::validate() const {
  synth_train.validate();
  synth_test.validate();
  sampling.validate();
  hog.validate();
  if (hog.window != kPatchSize) throw ConfigError("hog.window must be " + std::to_string(kPatchSize));
  bootstrap.validate();
  cluster.validate();
  scan.validate();
  if (!(eval_iou > 0.0 && eval_iou < 1.0)) throw ConfigError("eval.iou must lie in (0, 1)");
  if (paths.train_dir == paths.test_dir) throw ConfigError("paths.train_dir and paths.test_dir must differ");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig build_run_config(const std::map<std::string, std::string>& values) {
  RunConfig c = defaults();
  for (const auto& [key, value] : values) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(c, key, value);
  }
  c.synth_train.seed = stage_seed(c.seed, SeedStream::synth_train);
  c.synth_test.seed = stage_seed(c.seed, SeedStream::synth_test);
  c.sampling.seed = stage_seed(c.seed, SeedStream::sampling);
  c.bootstrap.seed = stage_seed(c.seed, SeedStream::bootstrap);
  c.bootstrap.smo.seed = stage_seed(c.seed, SeedStream::smo);
  c.cluster.seed = stage_seed(c.seed, SeedStream::cluster);
  c.synth_train.threads = c.synth_test.threads = c.threads;
  c.bootstrap.threads = c.cluster.threads = c.scan.threads = c.threads;
  c.scan.window = c.hog.window;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> values;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    values = parse_key_values(buf.str());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    values[trim(o.substr(0, eq))] = trim(o.substr(eq + 1));
  }
  RunConfig c = build_run_config(values);
  c.validate();
  return c;
}

std::map<std::string, std::string> describe(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : fields()) out[key] = field.get(cfg);
  return out;
}

}  // namespace mkdet::cli
