#pragma once

#include <cstddef>
#include <cstdint>

#include "puq/numkernel/matrix.hpp"

namespace puq {

// He-uniform: i.i.d. U[-sqrt(6/fan_in), +sqrt(6/fan_in)] with fan_in = cols.
Matrix he_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace puq
