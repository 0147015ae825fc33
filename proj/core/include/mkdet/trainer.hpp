#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mkdet/kernel.hpp"
#include "mkdet/svm.hpp"

namespace mkdet {

inline constexpr std::size_t kAllNegatives = static_cast<std::size_t>(-1);

/// Which detector decides whether a pool negative is a false positive.
enum class MiningMode {
  own_index,         // the detector of the negative's assigned foreground index
  max_over_indices,  // the strongest detector; the tuple is added under that index
};

std::string_view to_string(MiningMode mode);
MiningMode parse_mining_mode(std::string_view text);

struct BootstrapConfig {
  std::size_t max_rounds = 10;
  std::size_t per_round_fp_cap = 1000;
  std::size_t initial_negatives = kAllNegatives;  // negatives in the first round
  std::vector<double> eta_grid{1.0};     // a single value disables cross-validation
  std::size_t cv_folds = 3;
  DistanceMode distance = DistanceMode::euclidean;
  MiningMode mining = MiningMode::own_index;
  SmoConfig smo;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t gram_dense_limit = 8192;

  void validate() const;
};

/// Result of training: the support tuples with label-signed weights
/// alpha_s = y_s * alpha_s(unsigned), so that
///   C(x, i) = sum_s alpha_s * k_theta(x_{fg(s)}, x_i) * (x_s . x) + bias.
struct SvmModel {
  std::vector<TrainingTuple> support;
  std::vector<double> signed_weights;
  double bias = 0.0;
  KernelParams kernel;  // eta selected in the final round
  ForegroundTable fg_table;
  std::size_t rounds_run = 0;
  bool converged = false;      // no pool negative scored above zero
  bool smo_converged = true;   // the final SMO solve met its tolerance

  std::size_t dim() const { return fg_table.dim(); }

  /// C(x, i) + bias by direct kernel expansion.
  double response(std::span<const double> x, std::size_t i) const;

  /// Throws DataError when sizes or indices are inconsistent.
  void validate() const;
};

struct RoundStats {
  std::size_t round = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;  // active negatives trained on this round
  double eta = 0.0;
  double cv_accuracy = -1.0;  // -1 when eta was not cross-validated
  std::size_t support_vectors = 0;
  std::size_t false_positives = 0;  // pool items scoring > 0 after training
  std::size_t added = 0;
  bool smo_converged = true;
  std::size_t smo_iterations = 0;
};

struct BootstrapResult {
  SvmModel model;
  std::vector<TrainingTuple> pool;          // every pool negative with its assigned index
  std::vector<TrainingTuple> training_set;  // final round's training set
  std::vector<RoundStats> rounds;
};

/// #(NB) * #(NF): the number of (background, foreground index) negatives.
std::uint64_t negative_combination_count(std::uint64_t nb, std::uint64_t nf);

/// Turns background features into label -1 tuples with uniformly random
/// foreground indices.
std::vector<TrainingTuple> assign_negative_indices(std::span<const std::vector<double>> negatives,
                                                   const ForegroundTable& table, std::uint64_t seed);

/// Fold id per sample; positives and negatives are dealt separately so every
/// fold sees both labels.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

/// Mean fold accuracy of an SVM trained with the given eta.
double cross_validate(std::span<const TrainingTuple> samples, const ForegroundTable& table, double eta,
                      const BootstrapConfig& cfg);

struct EtaScore {
  double eta = 0.0;
  double accuracy = 0.0;
};

struct EtaSelection {
  double eta = 0.0;
  std::vector<EtaScore> scores;  // ascending eta
};

/// Grid eta with the highest mean fold accuracy; ties go to the smallest eta.
EtaSelection select_eta(std::span<const TrainingTuple> samples, const ForegroundTable& table,
                        const BootstrapConfig& cfg);

/// One SVM fit at fixed kernel parameters.
SvmModel train_svm(std::span<const TrainingTuple> samples, const ForegroundTable& table, const KernelParams& kernel,
                   const SmoConfig& smo, unsigned threads = 1);

/// Bootstrap training with hard-negative mining.
///
/// Round 1 trains on every foreground plus the first initial_negatives pool
/// items. After each round the pool is scored; false positives not yet in the
/// training set are appended (in pool order, at most per_round_fp_cap) and
/// the SVM is retrained. Stops when the pool holds no false positive
/// (converged), when nothing new can be added, or after max_rounds.
BootstrapResult bootstrap_train(const std::vector<std::pair<std::vector<double>, int>>& foregrounds,
                                const std::vector<std::vector<double>>& negative_pool, const BootstrapConfig& cfg);

}  // namespace mkdet
