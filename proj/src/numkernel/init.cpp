#include "puq/numkernel/init.hpp"

#include <cmath>

#include "puq/error.hpp"
#include "puq/rng.hpp"

namespace puq {

Matrix he_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw ConfigError("he_init: dimensions must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(cols));
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace puq
