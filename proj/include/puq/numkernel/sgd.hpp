#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "puq/numkernel/mlp.hpp"

namespace puq {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 20;
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

// Momentum buffers, one per parameter block. Empty until the first step.
struct SgdState {
  std::vector<std::vector<double>> velocity;
};

// v <- m*v + grad + wd*param; param <- param - lr*v.
// Rejects any non-finite gradient before touching the parameters.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, SgdState& state,
              const SgdConfig& cfg);

void sgd_step(Mlp& net, const MlpGradients& grads, SgdState& state, const SgdConfig& cfg);

// Throws NumericError naming the first non-finite block.
void require_finite(std::span<const std::span<const double>> blocks, const char* what);

}  // namespace puq
