#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "puq/basemodel/tap_source.hpp"
#include "puq/dataio/dataset.hpp"
#include "puq/dataio/feature_cache.hpp"
#include "puq/evalharness/report.hpp"
#include "puq/metamodel/meta_model.hpp"
#include "puq/metamodel/train_meta.hpp"
#include "puq/uqmetrics/metrics.hpp"

namespace puq {

struct ReportOptions {
  std::uint64_t seed = 0;
  // Attach the alpha vector of every scored row (in-distribution rows first).
  bool dump_alpha = false;
};

// In-distribution rows are negatives, OOD rows positives. A live source adds
// base-model Entropy / MaxProb baseline rows and reports the base accuracy;
// a cached source reports the meta-model accuracy instead.
ExperimentReport run_ood(const MetaModel& meta, const TapSource& source, const Dataset& id_test,
                         const Dataset& ood_test, std::span<const MetricKind> metrics,
                         const ReportOptions& options = {});

// Correct meta predictions are negatives, errors positives. Metrics must be
// total-uncertainty ones (Entropy, MaxProb).
ExperimentReport run_misclassification(const MetaModel& meta, const TapSource& source,
                                       const Dataset& test, std::span<const MetricKind> metrics,
                                       const ReportOptions& options = {});

struct TrainedReport {
  TrainedMeta trained;
  ExperimentReport report;
};

// Trains a fresh meta-model on target-task features only and reports target
// accuracy plus OOD detection against `ood`. All caches and the spec must
// agree on tap dims and class count (FormatError otherwise).
TrainedReport run_transfer(const FeatureCache& target_train, const FeatureCache& target_test,
                           const FeatureCache& ood, const MetaModelSpec& spec,
                           const MetaTrainConfig& cfg, std::span<const MetricKind> metrics,
                           const ReportOptions& options = {});

enum class AblationMode { kFull, kLinearMeta, kCrossEnt, kLastLayer, kTenPercentData };

std::string_view to_string(AblationMode mode);
std::optional<AblationMode> parse_ablation_mode(std::string_view name);

// Meta mode, early-stopping score and data fraction used by an ablation.
struct AblationSetup {
  MetaModelSpec spec;
  MetaTrainConfig cfg;
  std::vector<MetricKind> default_metrics;
};
AblationSetup ablation_setup(AblationMode mode, std::span<const std::size_t> source_tap_dims,
                             std::size_t num_classes, const MetaTrainConfig& base_cfg);

// Trains the ablated meta-model on `train` and runs the OOD pipeline.
// Empty `metrics` selects the mode's defaults (Entropy for cross-entropy modes).
TrainedReport run_ablation(AblationMode mode, const TapSource& source, const Dataset& train,
                           const Dataset& id_test, const Dataset& ood_test,
                           const MetaTrainConfig& base_cfg, std::span<const MetricKind> metrics,
                           const ReportOptions& options = {});

// Metadata shared by the runners: spec and training bookkeeping.
nlohmann::json spec_to_json(const MetaModelSpec& spec);
nlohmann::json training_to_json(const TrainedMeta& trained);

}  // namespace puq
