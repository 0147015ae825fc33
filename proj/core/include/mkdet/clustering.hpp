#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mkdet/family.hpp"
#include "mkdet/matrix.hpp"

namespace mkdet {

/// 1 - cos(a, b). A zero vector is at distance 1 from any nonzero vector and
/// 0 from another zero vector.
double dist_alpha(std::span<const double> a, std::span<const double> b);

/// Symmetric distances with a zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  /// Takes ownership; throws DataError unless symmetric with a zero diagonal.
  explicit DistanceMatrix(SquareMatrix entries);

  /// Builds the matrix from a pair function evaluated on the upper triangle.
  static DistanceMatrix from_pairs(std::size_t n, const std::function<double(std::size_t, std::size_t)>& d,
                                   unsigned threads = 1);

  std::size_t size() const { return m_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const SquareMatrix& entries() const { return m_; }

 private:
  SquareMatrix m_;
};

/// Dist_alpha over the alpha' vectors of every detector.
DistanceMatrix alpha_distance_matrix(const DetectorFamily& family, unsigned threads = 1);

struct Clustering {
  std::vector<std::size_t> medoids;     // ascending point indices
  std::vector<std::size_t> assignment;  // point -> its medoid's point index
  double cost = 0.0;
  double build_cost = 0.0;  // cost after the BUILD phase
  std::size_t swaps = 0;

  std::size_t k() const { return medoids.size(); }
};

/// Assigns every point to its nearest medoid (ties to the lower index).
Clustering assign_to_medoids(const DistanceMatrix& dm, std::vector<std::size_t> medoids);

/// Partitioning Around Medoids: greedy BUILD, then the best improving
/// single swap is applied until none lowers the cost. Ties go to the lowest
/// index, so the result is fully deterministic and `seed` has no effect.
Clustering pam(const DistanceMatrix& dm, std::size_t k, std::uint64_t seed = 0);

/// Mean silhouette in [-1, 1]; singleton clusters contribute 0. Throws
/// DataError when fewer than two clusters exist.
double silhouette(const Clustering& c, const DistanceMatrix& dm);

struct KSelectConfig {
  double start_fraction = 0.5;
  double decay = 0.8;
  std::size_t k_min = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

/// The k values tried: ceil(start_fraction * n), then repeatedly
/// floor(k * decay) (at least one less than k) while k >= k_min.
std::vector<std::size_t> k_schedule(std::size_t n, const KSelectConfig& cfg);

struct KSelectRow {
  std::size_t k = 0;
  std::optional<double> silhouette;  // empty for k = 1
  double cost = 0.0;
  bool selected = false;
  std::optional<std::size_t> validation_misses;  // from the validation hook
};

struct KSelectReport {
  std::vector<KSelectRow> rows;
  std::size_t family_size = 0;
  std::size_t selected_k = 0;   // family_size when nothing was selected
  bool unchanged = false;       // no usable k; the family was returned as is
  std::size_t zero_vectors = 0;  // detectors whose alpha' is all zero

  /// Highest silhouette in the report, for self-audits.
  std::optional<double> best_silhouette() const;
};

/// Counts misses on a validation set for a candidate representative family.
/// Reported per k; never influences the selection.
using ValidationHook = std::function<std::size_t(const DetectorFamily&)>;

/// Clusters the family by Dist_alpha, picks the k with the best silhouette
/// (ties to the larger k, which is tried first) and keeps the medoid detectors.
std::pair<DetectorFamily, KSelectReport> select_representatives(const DetectorFamily& family,
                                                                const KSelectConfig& cfg,
                                                                const ValidationHook& hook = {});

/// Restricts a family to the given member positions (kept in that order).
DetectorFamily subset_family(const DetectorFamily& family, std::span<const std::size_t> members);

/// CSV with header `k,silhouette,cost,selected`.
void write_k_report(std::ostream& out, const KSelectReport& report);

}  // namespace mkdet
