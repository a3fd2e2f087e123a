#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "puq/numkernel/matrix.hpp"

namespace puq {

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

// Mean softmax cross-entropy over the batch; grad = (softmax - onehot) / N.
LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

std::vector<double> softmax(std::span<const double> logits);
Matrix softmax_rows(const Matrix& logits);
double log_sum_exp(std::span<const double> values);

std::size_t argmax(std::span<const double> values);

}  // namespace puq
