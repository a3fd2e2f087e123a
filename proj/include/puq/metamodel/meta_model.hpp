#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "puq/basemodel/taps.hpp"
#include "puq/dirichlet/dirichlet.hpp"
#include "puq/numkernel/mlp.hpp"

namespace puq {

// kDirichlet: full multi-tap model trained with the ELBO.
// kLinearMeta: one linear map on the final tap, trained with the ELBO.
// kCrossEnt: full multi-tap model trained with softmax cross-entropy.
// kLastLayer: one linear map on the final tap with softmax cross-entropy.
enum class MetaMode { kDirichlet, kLinearMeta, kCrossEnt, kLastLayer };

std::string_view to_string(MetaMode mode);
std::optional<MetaMode> parse_meta_mode(std::string_view name);
bool uses_elbo(MetaMode mode);
bool uses_final_tap_only(MetaMode mode);

inline constexpr double kDefaultLogitClamp = 15.0;

struct MetaModelSpec {
  std::vector<std::size_t> tap_dims;  // taps the meta-model actually consumes
  std::size_t num_classes = 0;
  MetaMode mode = MetaMode::kDirichlet;
  double logit_clamp = kDefaultLogitClamp;
  bool operator==(const MetaModelSpec&) const = default;

  void validate() const;

  // Derives the spec from every tap the feature source offers; single-tap
  // modes keep only the last one.
  static MetaModelSpec for_taps(std::span<const std::size_t> source_tap_dims,
                                std::size_t num_classes, MetaMode mode);
};

// Widths of one reducer: halve (rounding up) while the half still exceeds K,
// then project to K. E.g. 64 -> 32 -> 16 -> 10 for K = 10.
std::vector<std::size_t> reducer_widths(std::size_t tap_dim, std::size_t num_classes);

// g = g_c o {g_j}: one ReLU reducer per tap, concatenated, then a single
// identity-activation combiner. Single-tap modes have no reducers and the
// combiner maps the final tap straight to K outputs.
class MetaModel {
 public:
  MetaModel(MetaModelSpec spec, std::vector<Mlp> reducers, Mlp combiner);

  const MetaModelSpec& spec() const { return spec_; }
  const std::vector<Mlp>& reducers() const { return reducers_; }
  const Mlp& combiner_net() const { return combiner_; }
  const DenseLayer& combiner() const { return combiner_.layers().front(); }

  std::vector<Mlp>& mutable_reducers() { return reducers_; }
  Mlp& mutable_combiner() { return combiner_; }

  // Reducers in order, then the combiner.
  std::vector<std::span<double>> parameter_spans();
  std::vector<std::span<const double>> parameter_spans() const;
  std::size_t num_parameters() const;

  bool operator==(const MetaModel&) const = default;

 private:
  MetaModelSpec spec_;
  std::vector<Mlp> reducers_;
  Mlp combiner_;
};

// Reducers get He-uniform weights; the combiner starts at zero weights and
// bias, so the untrained model outputs alpha = 1 for every input.
MetaModel build_meta(const MetaModelSpec& spec, std::uint64_t seed);

struct MetaTrace {
  std::vector<ActivationTrace> reducers;
  ActivationTrace combiner;
  Matrix log_alpha;  // clamped output
};

// Accepts every tap of the source; single-tap modes read only the last one.
MetaTrace meta_forward_trace(const MetaModel& meta, const TapBatch& taps);
Matrix meta_forward(const MetaModel& meta, const TapBatch& taps);
std::vector<double> meta_forward(const MetaModel& meta, const TapFeatures& taps);

struct MetaGradients {
  std::vector<MlpGradients> reducers;
  MlpGradients combiner;

  std::vector<std::span<const double>> spans() const;
};

// Backpropagates d loss / d (clamped log-alpha). Entries that hit the clamp
// pass no gradient.
MetaGradients meta_backward(const MetaModel& meta, const MetaTrace& trace,
                            const Matrix& log_alpha_grad);

struct MetaLoss {
  double loss = 0.0;
  MetaGradients grads;
};

// Mode loss: negated ELBO for the Dirichlet modes, softmax cross-entropy on
// the outputs taken as logits otherwise.
double meta_loss(const MetaModel& meta, const TapBatch& taps, std::span<const std::size_t> labels,
                 const ElboConfig& elbo);
MetaLoss meta_loss_and_grad(const MetaModel& meta, const TapBatch& taps,
                            std::span<const std::size_t> labels, const ElboConfig& elbo);

// "PUQM" v1: magic | u32 version | u32 n_taps | u32 dims[] | u32 n_classes
// | f64 logit_clamp | u32 mode | parameters f64 LE in parameter_spans order.
std::vector<std::uint8_t> encode_meta_model(const MetaModel& meta);
MetaModel decode_meta_model(std::span<const std::uint8_t> bytes,
                            const std::string& source = "<memory>");
void save_meta_model(const std::filesystem::path& path, const MetaModel& meta);
MetaModel load_meta_model(const std::filesystem::path& path);

}  // namespace puq
