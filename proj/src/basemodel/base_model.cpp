#include "puq/basemodel/base_model.hpp"

#include <bit>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "puq/dataio/binary_io.hpp"
#include "puq/error.hpp"
#include "puq/numkernel/loss.hpp"
#include "puq/rng.hpp"

namespace puq {
namespace {

constexpr std::string_view kMagic = "PUQB";
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const Mlp& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto block : parameter_spans(net)) {
    for (double v : block) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xFF;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

void check_input(const FrozenBaseModel& model, std::size_t dim) {
  if (dim != model.spec().input_dim) {
    throw ShapeError("base model expects input dim " + std::to_string(model.spec().input_dim) +
                     ", got " + std::to_string(dim));
  }
}

std::size_t count_correct(const Mlp& net, const Dataset& data) {
  const auto trace = forward(net, data.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(trace.output().row(i)) == data.labels[i]) ++correct;
  }
  return correct;
}

}  // namespace

TapFeatures tap_row(const TapBatch& batch, std::size_t row) {
  TapFeatures out;
  out.reserve(batch.size());
  for (const auto& tap : batch) {
    const auto r = tap.row(row);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

void BaseModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("base spec: input_dim must be positive");
  if (num_classes < 2) throw ConfigError("base spec: need at least 2 classes");
  if (hidden_widths.empty()) throw ConfigError("base spec: need at least one hidden layer");
  for (auto w : hidden_widths)
    if (w == 0) throw ConfigError("base spec: hidden widths must be positive");
  if (tap_layers.empty()) throw ConfigError("base spec: need at least one tap");
  if (tap_layers.size() > kMaxTaps) throw ConfigError("base spec: at most 5 taps are supported");
  for (std::size_t j = 0; j < tap_layers.size(); ++j) {
    if (tap_layers[j] >= hidden_widths.size())
      throw ConfigError("base spec: tap layer " + std::to_string(tap_layers[j]) +
                        " is not a hidden layer");
    if (j > 0 && tap_layers[j] <= tap_layers[j - 1])
      throw ConfigError("base spec: tap layers must be strictly increasing");
  }
}

std::vector<std::size_t> BaseModelSpec::tap_dims() const {
  std::vector<std::size_t> dims;
  for (auto t : tap_layers) dims.push_back(hidden_widths[t]);
  return dims;
}

std::vector<std::size_t> BaseModelSpec::layer_dims() const {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden_widths.begin(), hidden_widths.end());
  dims.push_back(num_classes);
  return dims;
}

BaseModelSpec BaseModelSpec::default_for(std::size_t input_dim, std::size_t num_classes) {
  return {input_dim, {256, 128, 64}, num_classes, {0, 1, 2}};
}

FrozenBaseModel::FrozenBaseModel(Mlp net, BaseModelSpec spec, double train_accuracy,
                                 std::optional<double> test_accuracy)
    : net_(std::move(net)),
      spec_(std::move(spec)),
      train_accuracy_(train_accuracy),
      test_accuracy_(test_accuracy) {
  spec_.validate();
  const auto dims = spec_.layer_dims();
  if (net_.num_layers() + 1 != dims.size()) throw ShapeError("frozen model: layer count mismatch");
  for (std::size_t i = 0; i < net_.num_layers(); ++i) {
    const auto& l = net_.layers()[i];
    if (l.in_dim() != dims[i] || l.out_dim() != dims[i + 1])
      throw ShapeError("frozen model: layer " + std::to_string(i) + " shape mismatch");
  }
  checksum_ = fnv1a(net_);
}

std::uint64_t FrozenBaseModel::compute_checksum() const { return fnv1a(net_); }

BaseTrainResult train_base(const Dataset& train, const BaseModelSpec& spec, const SgdConfig& sgd,
                           const Dataset* test) {
  spec.validate();
  sgd.validate();
  train.validate();
  if (train.num_classes != spec.num_classes)
    throw InputError("train_base: dataset has " + std::to_string(train.num_classes) +
                     " classes, spec has " + std::to_string(spec.num_classes));
  if (train.dim() != spec.input_dim) throw ShapeError("train_base: input dimension mismatch");

  const auto dims = spec.layer_dims();
  Mlp net = Mlp::make(dims, Activation::kIdentity, derive_seed(sgd.seed, streams::kInit));
  SgdState state;
  std::vector<BaseEpochLog> log;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < sgd.max_epochs; ++epoch) {
    Rng rng = rng_for(derive_seed(sgd.seed, streams::kShuffle), epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += sgd.batch_size) {
      const std::size_t end = std::min(order.size(), start + sgd.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix x = select_rows(train.inputs, idx);
      std::vector<std::size_t> y;
      y.reserve(idx.size());
      for (auto i : idx) y.push_back(train.labels[i]);
      const auto trace = forward(net, x);
      const auto ce = softmax_cross_entropy(trace.output(), y);
      const auto grads = backward(net, trace, ce.grad);
      sgd_step(net, grads.params, state, sgd);
      loss_sum += ce.loss;
      ++batches;
    }
    log.push_back({epoch + 1, loss_sum / static_cast<double>(std::max<std::size_t>(1, batches)),
                   static_cast<double>(count_correct(net, train)) /
                       static_cast<double>(train.size())});
  }
  const double train_acc =
      static_cast<double>(count_correct(net, train)) / static_cast<double>(train.size());
  std::optional<double> test_acc;
  if (test != nullptr) {
    test->validate();
    test_acc = static_cast<double>(count_correct(net, *test)) / static_cast<double>(test->size());
  }
  return {FrozenBaseModel(std::move(net), spec, train_acc, test_acc), std::move(log)};
}

TapBatch extract_taps(const FrozenBaseModel& model, const Matrix& inputs) {
  check_input(model, inputs.cols());
  const auto trace = forward(model.net(), inputs);
  TapBatch taps;
  for (auto layer : model.spec().tap_layers) taps.push_back(trace.layers[layer].post);
  return taps;
}

TapFeatures extract_taps(const FrozenBaseModel& model, std::span<const double> x) {
  return tap_row(extract_taps(model, Matrix::row_vector(x)), 0);
}

Matrix base_predict(const FrozenBaseModel& model, const Matrix& inputs) {
  check_input(model, inputs.cols());
  return softmax_rows(forward(model.net(), inputs).output());
}

std::vector<double> base_predict(const FrozenBaseModel& model, std::span<const double> x) {
  const Matrix p = base_predict(model, Matrix::row_vector(x));
  return {p.row(0).begin(), p.row(0).end()};
}

double accuracy(const FrozenBaseModel& model, const Dataset& data) {
  check_input(model, data.dim());
  if (data.size() == 0) throw InputError("accuracy: empty dataset");
  return static_cast<double>(count_correct(model.net(), data)) / static_cast<double>(data.size());
}

double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double base_uncertainty(std::span<const double> probabilities, BaseScore kind) {
  switch (kind) {
    case BaseScore::kEntropy:
      return shannon_entropy(probabilities);
    case BaseScore::kMaxProb:
      return 1.0 - *std::max_element(probabilities.begin(), probabilities.end());
  }
  return 0.0;
}

double base_uncertainty(const FrozenBaseModel& model, std::span<const double> x, BaseScore kind) {
  return base_uncertainty(base_predict(model, x), kind);
}

std::vector<std::uint8_t> encode_base_model(const FrozenBaseModel& model) {
  const auto& spec = model.spec();
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(spec.input_dim));
  w.u32(static_cast<std::uint32_t>(spec.hidden_widths.size()));
  for (auto h : spec.hidden_widths) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(spec.num_classes));
  w.u32(static_cast<std::uint32_t>(spec.tap_layers.size()));
  for (auto t : spec.tap_layers) w.u32(static_cast<std::uint32_t>(t));
  w.f64(model.train_accuracy());
  w.f64(model.test_accuracy().value_or(std::numeric_limits<double>::quiet_NaN()));
  for (const auto block : parameter_spans(model.net()))
    for (double v : block) w.f64(v);
  return w.release();
}

FrozenBaseModel decode_base_model(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kMagic);
  if (const auto v = r.u32(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
  BaseModelSpec spec;
  spec.input_dim = r.u32();
  const std::uint32_t n_hidden = r.u32();
  if (n_hidden == 0 || n_hidden > 64) r.fail("implausible hidden layer count");
  for (std::uint32_t i = 0; i < n_hidden; ++i) spec.hidden_widths.push_back(r.u32());
  spec.num_classes = r.u32();
  const std::uint32_t n_taps = r.u32();
  if (n_taps > kMaxTaps) r.fail("too many taps");
  for (std::uint32_t i = 0; i < n_taps; ++i) spec.tap_layers.push_back(r.u32());
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  const double train_acc = r.f64();
  const double test_acc = r.f64();
  const auto dims = spec.layer_dims();
  std::size_t expected = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) expected += dims[i] * dims[i + 1] + dims[i + 1];
  if (r.remaining() != expected * 8) {
    r.fail("parameter payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
           std::to_string(expected * 8));
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer l;
    l.weights = Matrix(dims[i + 1], dims[i]);
    for (double& v : l.weights.data()) v = r.f64();
    l.bias.resize(dims[i + 1]);
    for (double& v : l.bias) v = r.f64();
    l.activation = i + 2 == dims.size() ? Activation::kIdentity : Activation::kReLU;
    if (!all_finite(l.weights.data()) || !all_finite(l.bias))
      throw NumericError(source + ": non-finite parameter in layer " + std::to_string(i));
    layers.push_back(std::move(l));
  }
  std::optional<double> test;
  if (!std::isnan(test_acc)) test = test_acc;
  return FrozenBaseModel(Mlp(std::move(layers)), std::move(spec), train_acc, test);
}

void save_base_model(const std::filesystem::path& path, const FrozenBaseModel& model) {
  write_file_atomic(path, encode_base_model(model));
}

FrozenBaseModel load_base_model(const std::filesystem::path& path) {
  return decode_base_model(read_file_bytes(path), path.string());
}

}  // namespace puq
