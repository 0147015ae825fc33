#include "mkdet/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mkdet/error.hpp"
#include "mkdet/parallel.hpp"

namespace mkdet {

std::string_view to_string(DistanceMode mode) {
  return mode == DistanceMode::euclidean ? "euclidean" : "squared_euclidean";
}

DistanceMode parse_distance_mode(std::string_view text) {
  if (text == "euclidean") return DistanceMode::euclidean;
  if (text == "squared_euclidean") return DistanceMode::squared_euclidean;
  throw ConfigError("unknown distance mode '" + std::string(text) + "'");
}

void KernelParams::validate() const {
  if (!(eta > 0) || !std::isfinite(eta)) throw ConfigError("kernel: eta must be a positive finite number");
}

std::size_t ForegroundTable::add(std::vector<double> x, int subclass) {
  if (!entries_.empty() && x.size() != dim()) throw DataError("foreground table: feature length mismatch");
  entries_.push_back({std::move(x), subclass});
  return entries_.size() - 1;
}

const ForegroundEntry& ForegroundTable::at(std::size_t i) const {
  if (i >= entries_.size()) {
    throw DataError("foreground index " + std::to_string(i) + " outside table of size " +
                    std::to_string(entries_.size()));
  }
  return entries_[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("dot: length mismatch");
  // Four independent partial sums; the combination order is fixed.
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  const std::size_t n = a.size();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}

double distance(std::span<const double> a, std::span<const double> b, DistanceMode mode) {
  if (a.size() != b.size()) throw DataError("distance: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return mode == DistanceMode::euclidean ? std::sqrt(s) : s;
}

double k_theta(std::span<const double> a, std::span<const double> b, const KernelParams& p) {
  return std::exp(-p.eta * distance(a, b, p.distance));
}

double k_x_linear(std::span<const double> a, std::span<const double> b) { return dot(a, b); }

double train_kernel(const TrainingTuple& t1, const TrainingTuple& t2, const ForegroundTable& table,
                    const KernelParams& p) {
  const auto& f1 = table.at(t1.fg_index).x;
  const auto& f2 = table.at(t2.fg_index).x;
  return k_theta(f1, f2, p) * k_x_linear(t1.x, t2.x);
}

SquareMatrix gram(std::span<const TrainingTuple> samples, const ForegroundTable& table, const KernelParams& p,
                  unsigned threads) {
  if (samples.empty()) throw DataError("gram: empty sample list");
  const std::size_t n = samples.size();
  SquareMatrix g(n);
  parallel_for(n, threads, [&](std::size_t a) {
    for (std::size_t b = a; b < n; ++b) g(a, b) = train_kernel(samples[a], samples[b], table, p);
  });
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
  }
  return g;
}

std::vector<double> foreground_kernel_table(const ForegroundTable& table, const KernelParams& p,
                                            unsigned threads) {
  const std::size_t n = table.size();
  std::vector<double> out(n * n, 1.0);
  parallel_for(n, threads, [&](std::size_t a) {
    for (std::size_t b = a + 1; b < n; ++b) out[a * n + b] = k_theta(table[a].x, table[b].x, p);
  });
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < a; ++b) out[a * n + b] = out[b * n + a];
  }
  return out;
}

LinearGram::LinearGram(std::size_t dense_limit, std::size_t cache_rows, unsigned threads)
    : dense_limit_(dense_limit), cache_rows_(std::max<std::size_t>(cache_rows, 2)), threads_(threads) {}

void LinearGram::append(std::span<const double> x) {
  if (count_ == 0) dim_ = x.size();
  if (x.size() != dim_) throw DataError("gram: feature length mismatch");
  samples_.insert(samples_.end(), x.begin(), x.end());
  ++count_;
  if (!dense()) {
    dense_.clear();
    dense_.shrink_to_fit();
    filled_ = capacity_ = 0;
    rows_.clear();
    lru_.clear();
  }
}

void LinearGram::sync_dense() {
  if (filled_ == count_) return;
  if (count_ > capacity_) {
    std::size_t cap = std::max<std::size_t>(capacity_ * 2, 64);
    while (cap < count_) cap *= 2;
    cap = std::min(std::max(cap, count_), dense_limit_);
    std::vector<double> grown(cap * cap);
    for (std::size_t a = 0; a < filled_; ++a) {
      std::copy_n(dense_.data() + a * capacity_, filled_, grown.data() + a * cap);
    }
    dense_ = std::move(grown);
    capacity_ = cap;
  }
  const std::size_t first_new = filled_;
  parallel_for(count_ - first_new, threads_, [&](std::size_t k) {
    const std::size_t a = first_new + k;
    for (std::size_t b = 0; b <= a; ++b) dense_[a * capacity_ + b] = dot(sample(a), sample(b));
  });
  for (std::size_t a = first_new; a < count_; ++a) {
    for (std::size_t b = 0; b < a; ++b) dense_[b * capacity_ + a] = dense_[a * capacity_ + b];
  }
  filled_ = count_;
}

const std::vector<double>& LinearGram::cached_row(std::size_t a) {
  if (auto it = rows_.find(a); it != rows_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second.second);
    return it->second.first;
  }
  if (rows_.size() >= cache_rows_) {
    rows_.erase(lru_.back());
    lru_.pop_back();
  }
  std::vector<double> row(count_);
  for (std::size_t b = 0; b < count_; ++b) row[b] = dot(sample(a), sample(b));
  lru_.push_front(a);
  return rows_.emplace(a, std::make_pair(std::move(row), lru_.begin())).first->second.first;
}

double LinearGram::operator()(std::size_t a, std::size_t b) {
  if (dense()) {
    sync_dense();
    return dense_[a * capacity_ + b];
  }
  if (auto it = rows_.find(b); it != rows_.end() && !rows_.contains(a)) return it->second.first[a];
  return cached_row(a)[b];
}

}  // namespace mkdet
