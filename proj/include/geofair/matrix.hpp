#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace geofair {

/// Dense column-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[c * rows_ + r];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[c * rows_ + r];
  }

  std::span<double> col(std::size_t c) {
    return {values_.data() + c * rows_, rows_};
  }
  std::span<const double> col(std::size_t c) const {
    return {values_.data() + c * rows_, rows_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace geofair
