#include "puq/numkernel/matrix.hpp"

#include <cmath>
#include <string>

#include "puq/error.hpp"

namespace puq {
namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Matrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_bt: " + dims(a) + " vs " + dims(b) + "^T");
  }
  Matrix out(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i).data();
    double* orow = out.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j).data();
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ar[t] * br[t];
      orow[j] = acc;
    }
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + dims(a) + " vs " + dims(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* orow = out.row(i).data();
    for (std::size_t t = 0; t < a.cols(); ++t) {
      const double s = a(i, t);
      if (s == 0.0) continue;
      const double* br = b.row(t).data();
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += s * br[j];
    }
  }
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at: " + dims(a) + "^T vs " + dims(b));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t n = 0; n < a.rows(); ++n) {
    const double* br = b.row(n).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = a(n, i);
      if (s == 0.0) continue;
      double* orow = out.row(i).data();
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += s * br[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= m.rows()) {
      throw ShapeError("select_rows: index " + std::to_string(indices[r]) +
                       " out of range for " + dims(m));
    }
    const auto src = m.row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) throw ShapeError("slice_rows: bad range for " + dims(m));
  const auto first = m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols());
  const auto last = m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols());
  return Matrix(end - begin, m.cols(), std::vector<double>(first, last));
}

Matrix hconcat(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw ShapeError("hconcat: row count mismatch");
    cols += b.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r).begin();
    for (const auto& b : blocks) {
      const auto src = b.row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

Matrix vconcat(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t cols = blocks.front().cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw ShapeError("vconcat: column count mismatch");
    data.insert(data.end(), b.data().begin(), b.data().end());
    rows += b.rows();
  }
  return Matrix(rows, cols, std::move(data));
}

std::vector<Matrix> hsplit(const Matrix& m, std::span<const std::size_t> widths) {
  std::size_t total = 0;
  for (auto w : widths) total += w;
  if (total != m.cols()) {
    throw ShapeError("hsplit: widths sum to " + std::to_string(total) + " but matrix is " +
                     dims(m));
  }
  std::vector<Matrix> out;
  out.reserve(widths.size());
  std::size_t offset = 0;
  for (auto w : widths) {
    Matrix block(m.rows(), w);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto src = m.row(r).subspan(offset, w);
      std::copy(src.begin(), src.end(), block.row(r).begin());
    }
    out.push_back(std::move(block));
    offset += w;
  }
  return out;
}

}  // namespace puq
