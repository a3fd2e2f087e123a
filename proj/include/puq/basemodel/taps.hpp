#pragma once

#include <vector>

#include "puq/numkernel/matrix.hpp"

namespace puq {

// Intermediate features of one sample, one vector per tap.
using TapFeatures = std::vector<std::vector<double>>;
// Intermediate features of a batch, one N x d_j block per tap.
using TapBatch = std::vector<Matrix>;

TapFeatures tap_row(const TapBatch& batch, std::size_t row);

}  // namespace puq
