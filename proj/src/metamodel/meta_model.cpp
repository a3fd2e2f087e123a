#include "puq/metamodel/meta_model.hpp"

#include <algorithm>
#include <cmath>

#include "puq/dataio/binary_io.hpp"
#include "puq/error.hpp"
#include "puq/numkernel/loss.hpp"
#include "puq/rng.hpp"

namespace puq {
namespace {

constexpr std::string_view kMagic = "PUQM";
constexpr std::uint32_t kVersion = 1;

// The tap blocks a model reads, in reducer order.
std::vector<const Matrix*> select_taps(const MetaModelSpec& spec, const TapBatch& taps) {
  std::vector<const Matrix*> out;
  if (uses_final_tap_only(spec.mode)) {
    if (taps.empty()) throw ShapeError("meta_forward: no taps supplied");
    out.push_back(&taps.back());
  } else {
    if (taps.size() != spec.tap_dims.size()) {
      throw ShapeError("meta_forward: expected " + std::to_string(spec.tap_dims.size()) +
                       " taps, got " + std::to_string(taps.size()));
    }
    for (const auto& t : taps) out.push_back(&t);
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (out[j]->cols() != spec.tap_dims[j]) {
      throw ShapeError("meta_forward: tap " + std::to_string(j) + " has dim " +
                       std::to_string(out[j]->cols()) + ", expected " +
                       std::to_string(spec.tap_dims[j]));
    }
    if (out[j]->rows() != out.front()->rows()) throw ShapeError("meta_forward: tap row counts differ");
  }
  return out;
}

}  // namespace

std::string_view to_string(MetaMode mode) {
  switch (mode) {
    case MetaMode::kDirichlet: return "dirichlet";
    case MetaMode::kLinearMeta: return "linear_meta";
    case MetaMode::kCrossEnt: return "cross_ent";
    case MetaMode::kLastLayer: return "last_layer";
  }
  return "unknown";
}

std::optional<MetaMode> parse_meta_mode(std::string_view name) {
  for (auto m : {MetaMode::kDirichlet, MetaMode::kLinearMeta, MetaMode::kCrossEnt,
                 MetaMode::kLastLayer}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

bool uses_elbo(MetaMode mode) {
  return mode == MetaMode::kDirichlet || mode == MetaMode::kLinearMeta;
}

bool uses_final_tap_only(MetaMode mode) {
  return mode == MetaMode::kLinearMeta || mode == MetaMode::kLastLayer;
}

void MetaModelSpec::validate() const {
  if (tap_dims.empty()) throw ConfigError("meta spec: tap_dims must not be empty");
  if (num_classes < 2) throw ConfigError("meta spec: need at least 2 classes");
  if (!(logit_clamp > 0.0) || !std::isfinite(logit_clamp))
    throw ConfigError("meta spec: logit_clamp must be finite and > 0");
  if (uses_final_tap_only(mode) && tap_dims.size() != 1)
    throw ConfigError("meta spec: mode " + std::string(to_string(mode)) +
                      " uses exactly the final tap");
  for (auto d : tap_dims) {
    if (d < num_classes)
      throw ConfigError("meta spec: tap dim " + std::to_string(d) + " is smaller than K=" +
                        std::to_string(num_classes) + "; no valid halving chain");
  }
}

MetaModelSpec MetaModelSpec::for_taps(std::span<const std::size_t> source_tap_dims,
                                      std::size_t num_classes, MetaMode mode) {
  MetaModelSpec spec;
  spec.num_classes = num_classes;
  spec.mode = mode;
  if (uses_final_tap_only(mode)) {
    if (source_tap_dims.empty()) throw ConfigError("meta spec: source offers no taps");
    spec.tap_dims = {source_tap_dims.back()};
  } else {
    spec.tap_dims.assign(source_tap_dims.begin(), source_tap_dims.end());
  }
  spec.validate();
  return spec;
}

std::vector<std::size_t> reducer_widths(std::size_t tap_dim, std::size_t num_classes) {
  if (tap_dim < num_classes) {
    throw ConfigError("reducer: tap dim " + std::to_string(tap_dim) + " < K=" +
                      std::to_string(num_classes));
  }
  std::vector<std::size_t> widths{tap_dim};
  std::size_t d = tap_dim;
  while ((d + 1) / 2 > num_classes) {
    d = (d + 1) / 2;
    widths.push_back(d);
  }
  widths.push_back(num_classes);
  return widths;
}

MetaModel::MetaModel(MetaModelSpec spec, std::vector<Mlp> reducers, Mlp combiner)
    : spec_(std::move(spec)), reducers_(std::move(reducers)), combiner_(std::move(combiner)) {
  spec_.validate();
  const std::size_t k = spec_.num_classes;
  if (combiner_.num_layers() != 1 || combiner_.layers().front().activation != Activation::kIdentity)
    throw ShapeError("meta model: combiner must be a single identity layer");
  if (combiner_.output_dim() != k) throw ShapeError("meta model: combiner must output K values");
  if (uses_final_tap_only(spec_.mode)) {
    if (!reducers_.empty()) throw ShapeError("meta model: single-tap modes have no reducers");
    if (combiner_.input_dim() != spec_.tap_dims.front())
      throw ShapeError("meta model: combiner input must equal the final tap dim");
  } else {
    if (reducers_.size() != spec_.tap_dims.size())
      throw ShapeError("meta model: one reducer per tap required");
    for (std::size_t j = 0; j < reducers_.size(); ++j) {
      if (reducers_[j].input_dim() != spec_.tap_dims[j] || reducers_[j].output_dim() != k)
        throw ShapeError("meta model: reducer " + std::to_string(j) + " has the wrong shape");
    }
    if (combiner_.input_dim() != reducers_.size() * k)
      throw ShapeError("meta model: combiner input must be m*K");
  }
}

std::vector<std::span<double>> MetaModel::parameter_spans() {
  std::vector<std::span<double>> out;
  for (auto& r : reducers_) {
    auto s = puq::parameter_spans(r);
    out.insert(out.end(), s.begin(), s.end());
  }
  auto c = puq::parameter_spans(combiner_);
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::vector<std::span<const double>> MetaModel::parameter_spans() const {
  std::vector<std::span<const double>> out;
  for (const auto& r : reducers_) {
    auto s = puq::parameter_spans(r);
    out.insert(out.end(), s.begin(), s.end());
  }
  auto c = puq::parameter_spans(combiner_);
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::size_t MetaModel::num_parameters() const {
  std::size_t n = combiner_.num_parameters();
  for (const auto& r : reducers_) n += r.num_parameters();
  return n;
}

MetaModel build_meta(const MetaModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t k = spec.num_classes;
  std::vector<Mlp> reducers;
  std::size_t combiner_in = spec.tap_dims.front();
  if (!uses_final_tap_only(spec.mode)) {
    for (std::size_t j = 0; j < spec.tap_dims.size(); ++j) {
      const auto widths = reducer_widths(spec.tap_dims[j], k);
      reducers.push_back(Mlp::make(widths, Activation::kReLU, derive_seed(seed, j)));
    }
    combiner_in = spec.tap_dims.size() * k;
  }
  // The combiner starts at zero so an untrained model outputs the uniform
  // prior alpha = 1 instead of extreme concentrations.
  Matrix weights(k, combiner_in, 0.0);
  Mlp combiner({DenseLayer{std::move(weights), std::vector<double>(k, 0.0), Activation::kIdentity}});
  return MetaModel(spec, std::move(reducers), std::move(combiner));
}

MetaTrace meta_forward_trace(const MetaModel& meta, const TapBatch& taps) {
  const auto& spec = meta.spec();
  const auto inputs = select_taps(spec, taps);
  MetaTrace trace;
  if (uses_final_tap_only(spec.mode)) {
    trace.combiner = forward(meta.combiner_net(), *inputs.front());
  } else {
    std::vector<Matrix> features;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      trace.reducers.push_back(forward(meta.reducers()[j], *inputs[j]));
      features.push_back(trace.reducers.back().output());
    }
    trace.combiner = forward(meta.combiner_net(), hconcat(features));
  }
  trace.log_alpha = trace.combiner.output();
  for (double& v : trace.log_alpha.data()) v = std::clamp(v, -spec.logit_clamp, spec.logit_clamp);
  return trace;
}

Matrix meta_forward(const MetaModel& meta, const TapBatch& taps) {
  return meta_forward_trace(meta, taps).log_alpha;
}

std::vector<double> meta_forward(const MetaModel& meta, const TapFeatures& taps) {
  TapBatch batch;
  for (const auto& t : taps) batch.push_back(Matrix::row_vector(t));
  const Matrix out = meta_forward(meta, batch);
  return {out.row(0).begin(), out.row(0).end()};
}

std::vector<std::span<const double>> MetaGradients::spans() const {
  std::vector<std::span<const double>> out;
  for (const auto& r : reducers) {
    auto s = gradient_spans(r);
    out.insert(out.end(), s.begin(), s.end());
  }
  auto c = gradient_spans(combiner);
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

MetaGradients meta_backward(const MetaModel& meta, const MetaTrace& trace,
                            const Matrix& log_alpha_grad) {
  const Matrix& pre = trace.combiner.output();
  if (log_alpha_grad.rows() != pre.rows() || log_alpha_grad.cols() != pre.cols())
    throw ShapeError("meta_backward: gradient shape does not match the output");
  const double clamp = meta.spec().logit_clamp;
  Matrix grad = log_alpha_grad;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double v = pre.data()[i];
    if (v > clamp || v < -clamp) grad.data()[i] = 0.0;
  }
  MetaGradients out;
  auto comb = backward(meta.combiner_net(), trace.combiner, grad);
  out.combiner = std::move(comb.params);
  if (!uses_final_tap_only(meta.spec().mode)) {
    const std::size_t k = meta.spec().num_classes;
    const std::vector<std::size_t> widths(meta.reducers().size(), k);
    const auto pieces = hsplit(comb.input_grad, widths);
    for (std::size_t j = 0; j < meta.reducers().size(); ++j) {
      out.reducers.push_back(backward(meta.reducers()[j], trace.reducers[j], pieces[j]).params);
    }
  }
  return out;
}

double meta_loss(const MetaModel& meta, const TapBatch& taps, std::span<const std::size_t> labels,
                 const ElboConfig& elbo) {
  const Matrix out = meta_forward(meta, taps);
  if (uses_elbo(meta.spec().mode)) return elbo_loss_and_grad(out, labels, elbo).loss;
  return softmax_cross_entropy(out, labels).loss;
}

MetaLoss meta_loss_and_grad(const MetaModel& meta, const TapBatch& taps,
                            std::span<const std::size_t> labels, const ElboConfig& elbo) {
  const MetaTrace trace = meta_forward_trace(meta, taps);
  MetaLoss out;
  Matrix grad;
  if (uses_elbo(meta.spec().mode)) {
    auto r = elbo_loss_and_grad(trace.log_alpha, labels, elbo);
    out.loss = r.loss;
    grad = std::move(r.grad);
  } else {
    auto r = softmax_cross_entropy(trace.log_alpha, labels);
    out.loss = r.loss;
    grad = std::move(r.grad);
  }
  out.grads = meta_backward(meta, trace, grad);
  return out;
}

std::vector<std::uint8_t> encode_meta_model(const MetaModel& meta) {
  const auto& spec = meta.spec();
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(spec.tap_dims.size()));
  for (auto d : spec.tap_dims) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(spec.num_classes));
  w.f64(spec.logit_clamp);
  w.u32(static_cast<std::uint32_t>(spec.mode));
  for (const auto block : meta.parameter_spans())
    for (double v : block) w.f64(v);
  return w.release();
}

MetaModel decode_meta_model(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kMagic);
  if (const auto v = r.u32(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
  MetaModelSpec spec;
  const std::uint32_t n_taps = r.u32();
  if (n_taps == 0 || n_taps > 64) r.fail("implausible tap count");
  for (std::uint32_t j = 0; j < n_taps; ++j) spec.tap_dims.push_back(r.u32());
  spec.num_classes = r.u32();
  spec.logit_clamp = r.f64();
  const std::uint32_t mode = r.u32();
  if (mode > static_cast<std::uint32_t>(MetaMode::kLastLayer)) r.fail("unknown mode tag");
  spec.mode = static_cast<MetaMode>(mode);
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  MetaModel meta = build_meta(spec, 0);
  auto blocks = meta.parameter_spans();
  std::size_t expected = 0;
  for (const auto& b : blocks) expected += b.size();
  if (r.remaining() != expected * 8) {
    r.fail("parameter payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
           std::to_string(expected * 8));
  }
  for (auto block : blocks)
    for (double& v : block) {
      v = r.f64();
      if (!std::isfinite(v)) throw NumericError(source + ": non-finite meta-model parameter");
    }
  return meta;
}

void save_meta_model(const std::filesystem::path& path, const MetaModel& meta) {
  write_file_atomic(path, encode_meta_model(meta));
}

MetaModel load_meta_model(const std::filesystem::path& path) {
  return decode_meta_model(read_file_bytes(path), path.string());
}

}  // namespace puq
