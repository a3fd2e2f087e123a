#include "puq/numkernel/mlp.hpp"

#include <string>

#include "puq/error.hpp"
#include "puq/numkernel/init.hpp"
#include "puq/rng.hpp"

namespace puq {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.weights.rows()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias length " +
                       std::to_string(l.bias.size()) + " != " +
                       std::to_string(l.weights.rows()) + " outputs");
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw ShapeError("layer " + std::to_string(i) + ": input dim " +
                       std::to_string(l.in_dim()) + " does not chain with previous output " +
                       std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

Mlp Mlp::make(std::span<const std::size_t> dims, Activation output_activation,
              std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("Mlp::make needs at least input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    layer.weights = he_init(dims[i + 1], dims[i], derive_seed(seed, i));
    layer.bias.assign(dims[i + 1], 0.0);
    layer.activation = i + 2 == dims.size() ? output_activation : Activation::kReLU;
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
std::size_t Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

ActivationTrace forward(const Mlp& net, const Matrix& input) {
  if (net.num_layers() == 0) throw ShapeError("forward: network has no layers");
  ActivationTrace trace;
  trace.input = input;
  trace.layers.reserve(net.num_layers());
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const DenseLayer& layer = net.layers()[i];
    const Matrix& x = trace.layer_input(i);
    if (x.cols() != layer.in_dim()) {
      throw ShapeError("forward: layer " + std::to_string(i) + " expects input dim " +
                       std::to_string(layer.in_dim()) + ", got " + std::to_string(x.cols()));
    }
    LayerActivation act;
    act.pre = matmul_bt(x, layer.weights);
    for (std::size_t r = 0; r < act.pre.rows(); ++r) {
      auto row = act.pre.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
    }
    act.post = act.pre;
    if (layer.activation == Activation::kReLU) {
      for (double& v : act.post.data()) v = v > 0.0 ? v : 0.0;
    }
    trace.layers.push_back(std::move(act));
  }
  return trace;
}

BackwardResult backward(const Mlp& net, const ActivationTrace& trace,
                        const Matrix& output_grad) {
  if (trace.layers.size() != net.num_layers()) {
    throw ShapeError("backward: trace has " + std::to_string(trace.layers.size()) +
                     " layers, network has " + std::to_string(net.num_layers()));
  }
  const Matrix& out = trace.output();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw ShapeError("backward: output gradient shape does not match network output");
  }
  BackwardResult result;
  result.params.layers.resize(net.num_layers());
  Matrix grad = output_grad;
  for (std::size_t i = net.num_layers(); i-- > 0;) {
    const DenseLayer& layer = net.layers()[i];
    const LayerActivation& act = trace.layers[i];
    if (layer.activation == Activation::kReLU) {
      auto g = grad.data();
      const auto pre = act.pre.data();
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(pre[k] > 0.0)) g[k] = 0.0;
      }
    }
    const Matrix& x = trace.layer_input(i);
    LayerGradient& lg = result.params.layers[i];
    lg.weights = matmul_at(grad, x);
    lg.bias.assign(layer.out_dim(), 0.0);
    for (std::size_t r = 0; r < grad.rows(); ++r) {
      const auto row = grad.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) lg.bias[c] += row[c];
    }
    grad = matmul(grad, layer.weights);
  }
  result.input_grad = std::move(grad);
  return result;
}

MlpGradients zero_gradients(const Mlp& net) {
  MlpGradients g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Matrix(l.weights.rows(), l.weights.cols()),
                        std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

std::vector<std::span<double>> parameter_spans(Mlp& net) {
  std::vector<std::span<double>> out;
  for (auto& l : net.mutable_layers()) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
  }
  return out;
}

std::vector<std::span<const double>> parameter_spans(const Mlp& net) {
  std::vector<std::span<const double>> out;
  for (const auto& l : net.layers()) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
  }
  return out;
}

std::vector<std::span<double>> gradient_spans(MlpGradients& grads) {
  std::vector<std::span<double>> out;
  for (auto& l : grads.layers) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
  }
  return out;
}

std::vector<std::span<const double>> gradient_spans(const MlpGradients& grads) {
  std::vector<std::span<const double>> out;
  for (const auto& l : grads.layers) {
    out.emplace_back(l.weights.data());
    out.emplace_back(l.bias);
  }
  return out;
}

}  // namespace puq
