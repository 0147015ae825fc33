#pragma once

#include <cstddef>
#include <list>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mkdet/matrix.hpp"

namespace mkdet {

enum class DistanceMode { euclidean, squared_euclidean };

std::string_view to_string(DistanceMode mode);
DistanceMode parse_distance_mode(std::string_view text);

struct KernelParams {
  double eta = 1.0;
  DistanceMode distance = DistanceMode::euclidean;

  void validate() const;
};

/// One foreground training sample: its feature vector and subclass label.
struct ForegroundEntry {
  std::vector<double> x;
  int subclass = 0;
};

/// Foreground samples indexed 0..size()-1; index i parameterizes detector i.
class ForegroundTable {
 public:
  std::size_t add(std::vector<double> x, int subclass);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return entries_.empty() ? 0 : entries_.front().x.size(); }

  const ForegroundEntry& operator[](std::size_t i) const { return entries_[i]; }
  const ForegroundEntry& at(std::size_t i) const;
  const std::vector<ForegroundEntry>& entries() const { return entries_; }

 private:
  std::vector<ForegroundEntry> entries_;
};

/// A sample (x, i) with label +1 or -1. Foreground tuples carry their own
/// table index; negatives carry a randomly assigned one.
struct TrainingTuple {
  std::vector<double> x;
  std::size_t fg_index = 0;
  int label = 0;

  bool operator==(const TrainingTuple&) const = default;
};

/// Sum of a[j] * b[j], accumulated in a fixed order.
double dot(std::span<const double> a, std::span<const double> b);

/// Euclidean (or squared Euclidean) distance per `mode`.
double distance(std::span<const double> a, std::span<const double> b, DistanceMode mode);

/// Within-class kernel exp(-eta * D(a, b)).
double k_theta(std::span<const double> a, std::span<const double> b, const KernelParams& p);

/// Between-class kernel: the dot product.
double k_x_linear(std::span<const double> a, std::span<const double> b);

/// Multiplicative training kernel
///   k_theta(x_{t1.fg_index}, x_{t2.fg_index}) * k_x(t1.x, t2.x).
double train_kernel(const TrainingTuple& t1, const TrainingTuple& t2, const ForegroundTable& table,
                    const KernelParams& p);

/// Dense Gram matrix of train_kernel over `samples`. The upper triangle is
/// evaluated and mirrored, so the result is exactly symmetric.
SquareMatrix gram(std::span<const TrainingTuple> samples, const ForegroundTable& table, const KernelParams& p,
                  unsigned threads = 1);

/// k_theta between every pair of foreground entries (row-major, size^2).
std::vector<double> foreground_kernel_table(const ForegroundTable& table, const KernelParams& p,
                                            unsigned threads = 1);

/// Linear Gram x_a . x_b over a growing list of samples.
///
/// Up to `dense_limit` samples the full matrix is kept and extended
/// incrementally as samples are appended. Past that, rows are computed on
/// demand and kept in an LRU cache of `cache_rows` rows.
class LinearGram {
 public:
  explicit LinearGram(std::size_t dense_limit = 8192, std::size_t cache_rows = 1024, unsigned threads = 1);

  void append(std::span<const double> x);
  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }
  bool dense() const { return count_ <= dense_limit_; }

  double operator()(std::size_t a, std::size_t b);
  std::span<const double> sample(std::size_t a) const { return {samples_.data() + a * dim_, dim_}; }

 private:
  void sync_dense();
  const std::vector<double>& cached_row(std::size_t a);

  std::size_t dense_limit_;
  std::size_t cache_rows_;
  unsigned threads_;
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> samples_;

  std::size_t filled_ = 0;    // dense entries valid for indices < filled_
  std::size_t capacity_ = 0;  // dense row stride
  std::vector<double> dense_;

  std::list<std::size_t> lru_;
  std::unordered_map<std::size_t, std::pair<std::vector<double>, std::list<std::size_t>::iterator>> rows_;
};

}  // namespace mkdet
