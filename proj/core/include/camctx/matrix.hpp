#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace camctx {

class Matrix;

// Non-owning read-only view of a row-major block of reals.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(const double* data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }
  const double* data() const noexcept { return data_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_ + r * cols_, cols_}; }

  // Rows [first, last).
  MatrixView row_range(std::size_t first, std::size_t last) const;

 private:
  const double* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

// Dense row-major matrix of 64-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  explicit Matrix(MatrixView view);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  MatrixView view() const noexcept { return {data_.data(), rows_, cols_}; }
  operator MatrixView() const noexcept { return view(); }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b
Matrix matmul(MatrixView a, MatrixView b);
// out = a * b^T
Matrix matmul_nt(MatrixView a, MatrixView b);
// out = a^T * b
Matrix matmul_tn(MatrixView a, MatrixView b);

Matrix transpose(MatrixView a);
double max_abs_diff(MatrixView a, MatrixView b);

// Four-way tensor laid out [n][h][w][d], the layout of cropped proposal features.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t n, std::size_t h, std::size_t w, std::size_t d, double fill = 0.0);

  std::size_t n() const noexcept { return n_; }
  std::size_t h() const noexcept { return h_; }
  std::size_t w() const noexcept { return w_; }
  std::size_t d() const noexcept { return d_; }

  double& at(std::size_t i, std::size_t y, std::size_t x, std::size_t c) {
    return data_[((i * h_ + y) * w_ + x) * d_ + c];
  }
  double at(std::size_t i, std::size_t y, std::size_t x, std::size_t c) const {
    return data_[((i * h_ + y) * w_ + x) * d_ + c];
  }
  std::span<double> cell(std::size_t i, std::size_t y, std::size_t x) {
    return {data_.data() + ((i * h_ + y) * w_ + x) * d_, d_};
  }
  std::span<const double> cell(std::size_t i, std::size_t y, std::size_t x) const {
    return {data_.data() + ((i * h_ + y) * w_ + x) * d_, d_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t n_ = 0, h_ = 0, w_ = 0, d_ = 0;
  std::vector<double> data_;
};

}  // namespace camctx
