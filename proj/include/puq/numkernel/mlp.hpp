#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "puq/numkernel/matrix.hpp"

namespace puq {

enum class Activation { kReLU, kIdentity };

struct DenseLayer {
  Matrix weights;             // out × in
  std::vector<double> bias;   // out
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

// Feed-forward stack of dense layers; consecutive dimensions must chain.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // He-uniform weights and zero biases. dims = {in, h1, ..., out}; the last
  // layer gets `output_activation`, every other one ReLU.
  static Mlp make(std::span<const std::size_t> dims, Activation output_activation,
                  std::uint64_t seed);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_parameters() const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

struct LayerActivation {
  Matrix pre;
  Matrix post;
};

struct ActivationTrace {
  Matrix input;
  std::vector<LayerActivation> layers;

  const Matrix& output() const { return layers.back().post; }
  // Input seen by layer i.
  const Matrix& layer_input(std::size_t i) const {
    return i == 0 ? input : layers[i - 1].post;
  }
};

struct LayerGradient {
  Matrix weights;
  std::vector<double> bias;
};

struct MlpGradients {
  std::vector<LayerGradient> layers;
};

struct BackwardResult {
  MlpGradients params;
  Matrix input_grad;
};

ActivationTrace forward(const Mlp& net, const Matrix& input);
BackwardResult backward(const Mlp& net, const ActivationTrace& trace,
                        const Matrix& output_grad);

// Zero-valued gradients shaped like the parameters of `net`.
MlpGradients zero_gradients(const Mlp& net);

// Canonical parameter order: per layer, weights (row-major) then bias.
std::vector<std::span<double>> parameter_spans(Mlp& net);
std::vector<std::span<const double>> parameter_spans(const Mlp& net);
std::vector<std::span<double>> gradient_spans(MlpGradients& grads);
std::vector<std::span<const double>> gradient_spans(const MlpGradients& grads);

}  // namespace puq
