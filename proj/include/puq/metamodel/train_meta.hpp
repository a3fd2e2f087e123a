#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "puq/basemodel/tap_source.hpp"
#include "puq/dataio/dataset.hpp"
#include "puq/dirichlet/dirichlet.hpp"
#include "puq/evalharness/corruption.hpp"
#include "puq/metamodel/meta_model.hpp"
#include "puq/numkernel/sgd.hpp"
#include "puq/uqmetrics/metrics.hpp"

namespace puq {

// Early-stopping signal evaluated after every epoch.
//   kOodAuroc: AUROC of `ood_score` between the validation split and its
//              corrupted copy (maximised).
//   kMisclassAuroc: AUROC of 1 - MaxP between correct and wrong validation
//              predictions (maximised).
//   kValLoss: validation mode loss (minimised).
enum class StopMetric { kOodAuroc, kMisclassAuroc, kValLoss };

std::string_view to_string(StopMetric metric);
std::optional<StopMetric> parse_stop_metric(std::string_view name);

struct MetaTrainConfig {
  ElboConfig elbo;
  SgdConfig sgd{0.1, 0.9, 5e-4, 128, 50, 0};
  double val_fraction = 0.2;
  std::size_t patience = 10;
  StopMetric stop_metric = StopMetric::kOodAuroc;
  MetricKind ood_score = MetricKind::kMutualInformation;
  CorruptionConfig corruption;
  double data_fraction = 1.0;

  void validate() const;

  // lambda = 0.1 below 10^4 training samples, 1e-3 from there on.
  static MetaTrainConfig defaults_for(std::size_t n_train);
};

struct MetaEpochRecord {
  std::size_t epoch = 0;       // 1-based
  double train_loss = 0.0;     // full fit-split loss after the epoch
  double stop_value = 0.0;
};

struct TrainedMeta {
  MetaModel model;             // best checkpoint
  std::vector<MetaEpochRecord> history{};
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_stop_value = 0.0;
  double initial_train_loss = 0.0;
  std::size_t n_used = 0;      // after data_fraction subsampling
  std::size_t n_fit = 0;
  std::size_t n_val = 0;
};

// Replaces the built-in stop metric; larger must be better.
using StopEvaluator = std::function<double(const MetaModel&, std::size_t epoch)>;

// Trains the meta-model on taps of `train` with minibatch SGD and keeps the
// checkpoint with the best stop metric (earliest epoch on ties). The base
// model behind `source`, if any, is checked to be unchanged afterwards.
TrainedMeta train_meta(MetaModel initial, const TapSource& source, const Dataset& train,
                       const MetaTrainConfig& cfg, const StopEvaluator& custom_stop = {});

// Which corruption each validation row receives: a seeded, balanced
// assignment over the enabled kinds (part sizes differ by at most one).
std::vector<CorruptionKind> corruption_assignment(std::size_t n, const CorruptionConfig& config,
                                                  std::uint64_t seed);

// Pseudo-OOD copy of a validation set; same rows, sentinel labels.
Dataset make_noisy_validation(const Dataset& val, const CorruptionConfig& config,
                              std::uint64_t seed);

}  // namespace puq
