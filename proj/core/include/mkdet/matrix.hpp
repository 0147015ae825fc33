#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mkdet {

/// Dense row-major n x n matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * n_, n_}; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace mkdet
