#pragma once

#include <cstddef>
#include <span>

#include "puq/numkernel/matrix.hpp"

namespace puq {

inline constexpr std::size_t kDefaultEceBins = 15;

// Expected calibration error over equal-width confidence bins
// ((b-1)/B, b/B]; confidence is the max probability of each row.
double ece(const Matrix& probabilities, std::span<const std::size_t> labels,
           std::size_t bins = kDefaultEceBins);

}  // namespace puq
