#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "puq/basemodel/taps.hpp"
#include "puq/dataio/dataset.hpp"
#include "puq/numkernel/mlp.hpp"
#include "puq/numkernel/sgd.hpp"

namespace puq {

inline constexpr std::size_t kMaxTaps = 5;

// Fully-connected ReLU classifier. Taps are post-activation outputs of the
// listed hidden layers; the logit layer is never a tap.
struct BaseModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t num_classes = 0;
  std::vector<std::size_t> tap_layers;

  void validate() const;
  std::vector<std::size_t> tap_dims() const;
  std::vector<std::size_t> layer_dims() const;

  // Hidden widths (256, 128, 64) with a tap after every hidden layer.
  static BaseModelSpec default_for(std::size_t input_dim, std::size_t num_classes);
};

// Pretrained classifier whose parameters can no longer change.
class FrozenBaseModel {
 public:
  FrozenBaseModel(Mlp net, BaseModelSpec spec, double train_accuracy,
                  std::optional<double> test_accuracy);

  const Mlp& net() const { return net_; }
  const BaseModelSpec& spec() const { return spec_; }
  double train_accuracy() const { return train_accuracy_; }
  std::optional<double> test_accuracy() const { return test_accuracy_; }
  // FNV-1a over the parameter bytes, taken at freeze time.
  std::uint64_t checksum() const { return checksum_; }
  std::uint64_t compute_checksum() const;

 private:
  Mlp net_;
  BaseModelSpec spec_;
  double train_accuracy_;
  std::optional<double> test_accuracy_;
  std::uint64_t checksum_;
};

struct BaseEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
};

struct BaseTrainResult {
  FrozenBaseModel model;
  std::vector<BaseEpochLog> log;
};

// Minibatch SGD on the softmax cross-entropy; deterministic given sgd.seed.
// When `test` is given its accuracy is recorded on the frozen model.
BaseTrainResult train_base(const Dataset& train, const BaseModelSpec& spec, const SgdConfig& sgd,
                           const Dataset* test = nullptr);

TapFeatures extract_taps(const FrozenBaseModel& model, std::span<const double> x);
TapBatch extract_taps(const FrozenBaseModel& model, const Matrix& inputs);

// Softmax of the final logits.
std::vector<double> base_predict(const FrozenBaseModel& model, std::span<const double> x);
Matrix base_predict(const FrozenBaseModel& model, const Matrix& inputs);

double accuracy(const FrozenBaseModel& model, const Dataset& data);

enum class BaseScore { kEntropy, kMaxProb };

double shannon_entropy(std::span<const double> p);
// Entropy in nats, or 1 - max p; larger means more uncertain.
double base_uncertainty(std::span<const double> probabilities, BaseScore kind);
double base_uncertainty(const FrozenBaseModel& model, std::span<const double> x, BaseScore kind);

// "PUQB" v1: magic | u32 version | u32 input_dim | u32 n_hidden | u32 widths[]
// | u32 n_classes | u32 n_taps | u32 taps[] | f64 train_acc | f64 test_acc
// (NaN when absent) | per layer: weights row-major then bias, f64 LE.
std::vector<std::uint8_t> encode_base_model(const FrozenBaseModel& model);
FrozenBaseModel decode_base_model(std::span<const std::uint8_t> bytes,
                                  const std::string& source = "<memory>");
void save_base_model(const std::filesystem::path& path, const FrozenBaseModel& model);
FrozenBaseModel load_base_model(const std::filesystem::path& path);

}  // namespace puq
