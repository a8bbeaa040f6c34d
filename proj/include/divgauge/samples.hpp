#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace divgauge {

// Row-major n x d matrix of samples; one row per draw.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<double> row(std::size_t i) {
    assert(i < rows_);
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const {
    assert(i < rows_);
    return {data_.data() + i * cols_, cols_};
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, 0.0);
  }

  // Select rows by index (used for minibatching fixed datasets).
  SampleMatrix gather(std::span<const std::size_t> indices) const;

  // Horizontal concatenation [a | b]; row counts must match.
  static SampleMatrix hconcat(const SampleMatrix& a, const SampleMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace divgauge
