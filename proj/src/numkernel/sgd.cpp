#include "puq/numkernel/sgd.hpp"

#include <cmath>
#include <string>

#include "puq/error.hpp"

namespace puq {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("sgd.learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("sgd.momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw ConfigError("sgd.weight_decay must be >= 0");
  if (batch_size == 0) throw ConfigError("sgd.batch_size must be >= 1");
}

void require_finite(std::span<const std::span<const double>> blocks, const char* what) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!all_finite(blocks[b])) {
      throw NumericError(std::string(what) + ": non-finite value in parameter block " +
                         std::to_string(b));
    }
  }
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, SgdState& state,
              const SgdConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeError("sgd_step: block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size()) {
      throw ShapeError("sgd_step: gradient block " + std::to_string(b) + " has wrong size");
    }
  }
  require_finite(grads, "sgd_step");
  if (state.velocity.empty()) {
    for (const auto& p : params) state.velocity.emplace_back(p.size(), 0.0);
  } else if (state.velocity.size() != params.size()) {
    throw ShapeError("sgd_step: momentum state does not match parameters");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& v = state.velocity[b];
    const auto p = params[b];
    const auto g = grads[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = cfg.momentum * v[i] + g[i] + cfg.weight_decay * p[i];
      p[i] -= cfg.learning_rate * v[i];
    }
  }
}

void sgd_step(Mlp& net, const MlpGradients& grads, SgdState& state, const SgdConfig& cfg) {
  const auto p = parameter_spans(net);
  const auto g = gradient_spans(grads);
  sgd_step(p, g, state, cfg);
}

}  // namespace puq
