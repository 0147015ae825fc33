#include "mkdet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "mkdet/error.hpp"
#include "mkdet/family.hpp"
#include "mkdet/parallel.hpp"
#include "mkdet/rng.hpp"

namespace mkdet {
namespace {

// Training kernel over sample indices, built from a shared linear Gram and
// a per-eta table of foreground kernel values.
struct CompositeKernel {
  LinearGram* linear;
  const std::vector<double>* fg_kernel;
  const std::vector<std::size_t>* fg_of;
  std::size_t nf;

  double operator()(std::size_t a, std::size_t b) const {
    return (*fg_kernel)[(*fg_of)[a] * nf + (*fg_of)[b]] * (*linear)(a, b);
  }
};

double fold_accuracy_mean(std::span<const int> labels, std::span<const std::size_t> fold_of, std::size_t folds,
                          const CompositeKernel& k, const SmoConfig& smo) {
  double total = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t a = 0; a < labels.size(); ++a) (fold_of[a] == f ? test_idx : train_idx).push_back(a);
    std::vector<int> train_labels;
    train_labels.reserve(train_idx.size());
    for (std::size_t a : train_idx) train_labels.push_back(labels[a]);
    const DualSolution sol =
        smo_train(train_labels, [&](std::size_t a, std::size_t b) { return k(train_idx[a], train_idx[b]); }, smo);
    std::size_t correct = 0;
    for (std::size_t t : test_idx) {
      double fx = sol.bias;
      for (std::size_t s : sol.sv_indices) fx += sol.signed_weight(s) * k(train_idx[s], t);
      if ((fx > 0 ? 1 : -1) == labels[t]) ++correct;
    }
    total += static_cast<double>(correct) / static_cast<double>(test_idx.size());
  }
  return total / static_cast<double>(folds);
}

struct IndexedSamples {
  std::vector<int> labels;
  std::vector<std::size_t> fg_of;
  LinearGram gram;

  IndexedSamples(std::span<const TrainingTuple> samples, const ForegroundTable& table, const BootstrapConfig& cfg)
      : gram(cfg.gram_dense_limit, 1024, cfg.threads) {
    for (const auto& t : samples) add(t, table);
  }
  void add(const TrainingTuple& t, const ForegroundTable& table) {
    table.at(t.fg_index);
    labels.push_back(t.label);
    fg_of.push_back(t.fg_index);
    gram.append(t.x);
  }
};

void check_cv_preconditions(std::span<const int> labels, std::size_t folds) {
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t neg = labels.size() - pos;
  if (pos < folds || neg < folds) {
    throw DataError("cross-validation needs at least " + std::to_string(folds) + " samples per label");
  }
}

EtaSelection select_eta_indexed(IndexedSamples& s, const ForegroundTable& table, const BootstrapConfig& cfg) {
  check_cv_preconditions(s.labels, cfg.cv_folds);
  std::vector<double> grid = cfg.eta_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto folds = stratified_folds(s.labels, cfg.cv_folds, derive_seed(cfg.seed, 0xF01D));

  EtaSelection out;
  double best = -1.0;
  for (double eta : grid) {
    const auto fgk = foreground_kernel_table(table, {eta, cfg.distance}, cfg.threads);
    const CompositeKernel k{&s.gram, &fgk, &s.fg_of, table.size()};
    const double acc = fold_accuracy_mean(s.labels, folds, cfg.cv_folds, k, cfg.smo);
    out.scores.push_back({eta, acc});
    if (acc > best) {
      best = acc;
      out.eta = eta;
    }
  }
  return out;
}

SvmModel model_from_solution(std::span<const TrainingTuple> samples, const DualSolution& sol,
                             const ForegroundTable& table, const KernelParams& kp) {
  SvmModel m;
  m.fg_table = table;
  m.kernel = kp;
  m.bias = sol.bias;
  m.smo_converged = sol.converged;
  for (std::size_t s : sol.sv_indices) {
    m.support.push_back(samples[s]);
    m.signed_weights.push_back(sol.signed_weight(s));
  }
  return m;
}

}  // namespace

std::string_view to_string(MiningMode mode) {
  return mode == MiningMode::own_index ? "own_index" : "max_over_indices";
}

MiningMode parse_mining_mode(std::string_view text) {
  if (text == "own_index") return MiningMode::own_index;
  if (text == "max_over_indices") return MiningMode::max_over_indices;
  throw ConfigError("unknown mining mode '" + std::string(text) + "'");
}

void BootstrapConfig::validate() const {
  if (max_rounds < 1) throw ConfigError("bootstrap: max_rounds must be >= 1");
  if (eta_grid.empty()) throw ConfigError("bootstrap: eta_grid must not be empty");
  for (double eta : eta_grid) KernelParams{eta, distance}.validate();
  if (cv_folds < 2) throw ConfigError("bootstrap: cv_folds must be >= 2");
  if (per_round_fp_cap < 1) throw ConfigError("bootstrap: per_round_fp_cap must be >= 1");
  smo.validate();
}

double SvmModel::response(std::span<const double> x, std::size_t i) const {
  const auto& xi = fg_table.at(i).x;
  double s = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    s += signed_weights[k] * k_theta(fg_table.at(support[k].fg_index).x, xi, kernel) * k_x_linear(support[k].x, x);
  }
  return s + bias;
}

void SvmModel::validate() const {
  if (fg_table.empty()) throw DataError("model: empty foreground table");
  if (support.size() != signed_weights.size()) throw DataError("model: support/weight count mismatch");
  kernel.validate();
  for (const auto& t : support) {
    fg_table.at(t.fg_index);
    if (t.x.size() != dim()) throw DataError("model: support vector length mismatch");
    if (t.label != 1 && t.label != -1) throw DataError("model: support label must be +1 or -1");
    if (t.label == 1 && t.x != fg_table[t.fg_index].x) {
      throw DataError("model: foreground support tuple does not match its table entry");
    }
  }
}

std::uint64_t negative_combination_count(std::uint64_t nb, std::uint64_t nf) { return nb * nf; }

std::vector<TrainingTuple> assign_negative_indices(std::span<const std::vector<double>> negatives,
                                                   const ForegroundTable& table, std::uint64_t seed) {
  if (table.empty()) throw DataError("cannot assign negative indices: empty foreground table");
  Rng rng(seed);
  std::vector<TrainingTuple> out;
  out.reserve(negatives.size());
  for (const auto& x : negatives) out.push_back({x, rng.index(table.size()), -1});
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t a = 0; a < labels.size(); ++a) (labels[a] > 0 ? pos : neg).push_back(a);
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t r = 0; r < pos.size(); ++r) fold_of[pos[r]] = r % folds;
  for (std::size_t r = 0; r < neg.size(); ++r) fold_of[neg[r]] = r % folds;
  return fold_of;
}

double cross_validate(std::span<const TrainingTuple> samples, const ForegroundTable& table, double eta,
                      const BootstrapConfig& cfg) {
  cfg.validate();
  IndexedSamples s(samples, table, cfg);
  check_cv_preconditions(s.labels, cfg.cv_folds);
  const auto folds = stratified_folds(s.labels, cfg.cv_folds, derive_seed(cfg.seed, 0xF01D));
  const auto fgk = foreground_kernel_table(table, {eta, cfg.distance}, cfg.threads);
  return fold_accuracy_mean(s.labels, folds, cfg.cv_folds, CompositeKernel{&s.gram, &fgk, &s.fg_of, table.size()},
                            cfg.smo);
}

EtaSelection select_eta(std::span<const TrainingTuple> samples, const ForegroundTable& table,
                        const BootstrapConfig& cfg) {
  cfg.validate();
  IndexedSamples s(samples, table, cfg);
  return select_eta_indexed(s, table, cfg);
}

SvmModel train_svm(std::span<const TrainingTuple> samples, const ForegroundTable& table, const KernelParams& kernel,
                   const SmoConfig& smo, unsigned threads) {
  kernel.validate();
  BootstrapConfig cfg;
  cfg.threads = threads;
  IndexedSamples s(samples, table, cfg);
  const auto fgk = foreground_kernel_table(table, kernel, threads);
  const DualSolution sol = smo_train(s.labels, CompositeKernel{&s.gram, &fgk, &s.fg_of, table.size()}, smo);
  return model_from_solution(samples, sol, table, kernel);
}

BootstrapResult bootstrap_train(const std::vector<std::pair<std::vector<double>, int>>& foregrounds,
                                const std::vector<std::vector<double>>& negative_pool, const BootstrapConfig& cfg) {
  cfg.validate();
  if (foregrounds.empty()) throw DataError("bootstrap: no foreground samples");
  if (negative_pool.empty()) throw DataError("bootstrap: empty negative pool");

  ForegroundTable table;
  for (const auto& [x, v] : foregrounds) table.add(x, v);
  for (const auto& x : negative_pool) {
    if (x.size() != table.dim()) throw DataError("bootstrap: negative feature length mismatch");
  }

  BootstrapResult result;
  result.pool = assign_negative_indices(negative_pool, table, derive_seed(cfg.seed, 1));
  const std::size_t nf = table.size();
  const std::size_t n_pool = result.pool.size();

  auto& active = result.training_set;
  for (std::size_t i = 0; i < nf; ++i) active.push_back({table[i].x, i, 1});
  std::set<std::pair<std::size_t, std::size_t>> used;  // (pool item, foreground index)
  for (std::size_t p = 0; p < std::min(n_pool, cfg.initial_negatives); ++p) {
    active.push_back(result.pool[p]);
    used.emplace(p, result.pool[p].fg_index);
  }
  IndexedSamples indexed(active, table, cfg);

  SvmModel model;
  for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
    RoundStats stats;
    stats.round = round;
    stats.positives = nf;
    stats.negatives = active.size() - nf;

    if (cfg.eta_grid.size() == 1) {
      stats.eta = cfg.eta_grid.front();
    } else {
      const EtaSelection sel = select_eta_indexed(indexed, table, cfg);
      stats.eta = sel.eta;
      for (const auto& s : sel.scores) {
        if (s.eta == sel.eta) stats.cv_accuracy = s.accuracy;
      }
    }
    const KernelParams kp{stats.eta, cfg.distance};
    const auto fgk = foreground_kernel_table(table, kp, cfg.threads);
    const DualSolution sol =
        smo_train(indexed.labels, CompositeKernel{&indexed.gram, &fgk, &indexed.fg_of, nf}, cfg.smo);
    model = model_from_solution(active, sol, table, kp);
    model.rounds_run = round;
    stats.smo_converged = sol.converged;
    stats.smo_iterations = sol.iterations;
    stats.support_vectors = model.support.size();

    // Score the pool through the folded linear detectors.
    std::vector<char> needed(nf, cfg.mining == MiningMode::max_over_indices);
    for (const auto& t : result.pool) needed[t.fg_index] = 1;
    std::vector<std::size_t> wanted;
    for (std::size_t i = 0; i < nf; ++i) {
      if (needed[i]) wanted.push_back(i);
    }
    std::vector<LinearDetector> detectors(nf);
    parallel_for(wanted.size(), cfg.threads, [&](std::size_t k) {
      detectors[wanted[k]] = build_detector(model, wanted[k]);
    });

    std::vector<double> score(n_pool);
    std::vector<std::size_t> best_index(n_pool);
    parallel_for(n_pool, cfg.threads, [&](std::size_t p) {
      const auto& t = result.pool[p];
      if (cfg.mining == MiningMode::own_index) {
        score[p] = dot(detectors[t.fg_index].w, t.x) + detectors[t.fg_index].bias;
        best_index[p] = t.fg_index;
      } else {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nf; ++i) {
          const double r = dot(detectors[i].w, t.x) + detectors[i].bias;
          if (r > best) best = r, best_index[p] = i;
        }
        score[p] = best;
      }
    });

    for (std::size_t p = 0; p < n_pool; ++p) {
      if (!(score[p] > 0.0)) continue;
      ++stats.false_positives;
      if (stats.added >= cfg.per_round_fp_cap) continue;
      if (!used.emplace(p, best_index[p]).second) continue;
      TrainingTuple t = result.pool[p];
      t.fg_index = best_index[p];
      indexed.add(t, table);
      active.push_back(std::move(t));
      ++stats.added;
    }
    result.rounds.push_back(stats);

    if (stats.false_positives == 0) {
      model.converged = true;
      break;
    }
    if (stats.added == 0) break;  // every false positive is already being trained on
    if (round == cfg.max_rounds) {
      // The appended negatives were not trained on; keep the returned
      // training set equal to what the model saw.
      active.resize(active.size() - stats.added);
    }
  }
  result.model = std::move(model);
  return result;
}

}  // namespace mkdet
