#include "puq/numkernel/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "puq/error.hpp"

namespace puq {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto p = softmax(logits.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(
      std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(logits.rows()) + " rows");
  }
  const std::size_t k = logits.cols();
  const double n = static_cast<double>(logits.rows());
  LossAndGrad out;
  out.grad = Matrix(logits.rows(), k);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (labels[r] >= k) {
      throw InputError("softmax_cross_entropy: label " + std::to_string(labels[r]) +
                       " out of range [0, " + std::to_string(k) + ") at row " +
                       std::to_string(r));
    }
    const auto row = logits.row(r);
    const double lse = log_sum_exp(row);
    total += lse - row[labels[r]];
    auto g = out.grad.row(r);
    for (std::size_t c = 0; c < k; ++c) {
      g[c] = (std::exp(row[c] - lse) - (c == labels[r] ? 1.0 : 0.0)) / n;
    }
  }
  out.loss = logits.rows() == 0 ? 0.0 : total / n;
  return out;
}

}  // namespace puq
