#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace puq {

// Dense row-major real64 matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool all_finite(std::span<const double> values);

// a · bᵀ, the layout used by dense layers (weights stored out × in).
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// a · b
Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ · b
Matrix matmul_at(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix select_rows(const Matrix& m, std::span<const std::size_t> indices);
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);
Matrix hconcat(std::span<const Matrix> blocks);
Matrix vconcat(std::span<const Matrix> blocks);
// Splits columns into consecutive blocks of the given widths.
std::vector<Matrix> hsplit(const Matrix& m, std::span<const std::size_t> widths);

}  // namespace puq
