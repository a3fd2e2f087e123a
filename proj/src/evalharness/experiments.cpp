#include "puq/evalharness/experiments.hpp"

#include <cmath>

#include "puq/basemodel/base_model.hpp"
#include "puq/error.hpp"
#include "puq/evalharness/calibration.hpp"
#include "puq/evalharness/ranking.hpp"
#include "puq/numkernel/loss.hpp"
#include "puq/rng.hpp"
#include "puq/uqmetrics/scoring.hpp"

namespace puq {
namespace {

using nlohmann::json;

Matrix mean_probabilities(const Matrix& log_alpha) {
  Matrix out(log_alpha.rows(), log_alpha.cols());
  for (std::size_t i = 0; i < log_alpha.rows(); ++i) {
    const auto p = predictive_mean(DirichletParams::from_log_alpha(log_alpha.row(i)));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

double accuracy_of(const Matrix& probs, std::span<const std::size_t> labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += argmax(probs.row(i)) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

MetricResult evaluate(std::string kind, std::span<const double> negatives,
                      std::span<const double> positives) {
  const auto samples = make_scored(negatives, positives);
  return {std::move(kind), auroc(samples), aupr(samples)};
}

std::vector<double> base_scores(const Matrix& probs, BaseScore kind) {
  std::vector<double> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) out[i] = base_uncertainty(probs.row(i), kind);
  return out;
}

void append_alpha(std::vector<std::vector<double>>& dump, const Matrix& log_alpha) {
  for (std::size_t i = 0; i < log_alpha.rows(); ++i) {
    std::vector<double> a;
    for (double v : log_alpha.row(i)) a.push_back(std::exp(v));
    dump.push_back(std::move(a));
  }
}

void check_cache(const FeatureCache& cache, const FeatureCache& reference, const char* what) {
  if (cache.tap_dims != reference.tap_dims || cache.num_classes != reference.num_classes)
    throw FormatError(std::string("transfer: ") + what +
                      " cache schema (tap dims / class count) differs from the training cache");
}

constexpr BaseScore kBaselines[] = {BaseScore::kEntropy, BaseScore::kMaxProb};

std::string baseline_name(BaseScore kind) {
  return std::string(to_string(kind == BaseScore::kEntropy ? MetricKind::kEntropy
                                                           : MetricKind::kMaxProb));
}

}  // namespace

json spec_to_json(const MetaModelSpec& spec) {
  return {{"mode", std::string(to_string(spec.mode))},
          {"tap_dims", spec.tap_dims},
          {"num_classes", spec.num_classes},
          {"logit_clamp", spec.logit_clamp}};
}

json training_to_json(const TrainedMeta& trained) {
  json history = json::array();
  for (const auto& h : trained.history)
    history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"stop_value", h.stop_value}});
  return {{"stopped_epoch", trained.stopped_epoch},
          {"best_epoch", trained.best_epoch},
          {"best_stop_value", trained.best_stop_value},
          {"initial_train_loss", trained.initial_train_loss},
          {"n_used", trained.n_used},
          {"n_fit", trained.n_fit},
          {"n_val", trained.n_val},
          {"history", history}};
}

ExperimentReport run_ood(const MetaModel& meta, const TapSource& source, const Dataset& id_test,
                         const Dataset& ood_test, std::span<const MetricKind> metrics,
                         const ReportOptions& options) {
  id_test.validate();
  ood_test.validate(true);
  if (metrics.empty()) throw ConfigError("run_ood: no metrics requested");
  const Matrix la_id = meta_log_alpha(meta, source, id_test.inputs);
  const Matrix la_ood = meta_log_alpha(meta, source, ood_test.inputs);

  ExperimentReport report;
  report.task = "eval-ood";
  report.seed = options.seed;
  for (auto kind : metrics) {
    report.metrics.push_back(evaluate(std::string(to_string(kind)),
                                      scores_from_log_alpha(la_id, kind),
                                      scores_from_log_alpha(la_ood, kind)));
  }
  const FrozenBaseModel* base = source.base();
  const Matrix probs = base ? base_predict(*base, id_test.inputs) : mean_probabilities(la_id);
  report.accuracy = accuracy_of(probs, id_test.labels);
  report.ece = ece(probs, id_test.labels);
  if (base) {
    const Matrix probs_ood = base_predict(*base, ood_test.inputs);
    for (auto kind : kBaselines) {
      report.baseline.push_back(
          evaluate(baseline_name(kind), base_scores(probs, kind), base_scores(probs_ood, kind)));
    }
  }
  report.metadata = {{"accuracy_source", base ? "base" : "meta"},
                     {"id_samples", id_test.size()},
                     {"ood_samples", ood_test.size()},
                     {"spec", spec_to_json(meta.spec())}};
  if (options.dump_alpha) {
    report.alpha_dump.emplace();
    append_alpha(*report.alpha_dump, la_id);
    append_alpha(*report.alpha_dump, la_ood);
  }
  return report;
}

ExperimentReport run_misclassification(const MetaModel& meta, const TapSource& source,
                                       const Dataset& test, std::span<const MetricKind> metrics,
                                       const ReportOptions& options) {
  test.validate();
  if (metrics.empty()) throw ConfigError("run_misclassification: no metrics requested");
  for (auto kind : metrics) {
    if (category(kind) != MetricCategory::kTotal)
      throw ConfigError("run_misclassification: metric " + std::string(to_string(kind)) +
                        " is not a total-uncertainty metric");
  }
  const Matrix la = meta_log_alpha(meta, source, test.inputs);
  const Matrix probs = mean_probabilities(la);
  std::vector<bool> wrong(test.size());
  std::size_t n_wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    wrong[i] = argmax(probs.row(i)) != test.labels[i];
    n_wrong += wrong[i];
  }
  if (n_wrong == 0)
    throw DegenerateError("misclassification: the meta-model classifies every test sample "
                          "correctly, so there are no positives to detect");
  if (n_wrong == test.size())
    throw DegenerateError("misclassification: every test prediction is wrong; no negatives");

  auto partition = [&](const std::vector<double>& scores, const std::vector<bool>& positive) {
    std::pair<std::vector<double>, std::vector<double>> out;
    for (std::size_t i = 0; i < scores.size(); ++i)
      (positive[i] ? out.second : out.first).push_back(scores[i]);
    return out;
  };

  ExperimentReport report;
  report.task = "eval-misclass";
  report.seed = options.seed;
  for (auto kind : metrics) {
    const auto [neg, pos] = partition(scores_from_log_alpha(la, kind), wrong);
    report.metrics.push_back(evaluate(std::string(to_string(kind)), neg, pos));
  }
  report.accuracy = 1.0 - static_cast<double>(n_wrong) / static_cast<double>(test.size());
  report.ece = ece(probs, test.labels);
  report.metadata = {{"accuracy_source", "meta"},
                     {"test_samples", test.size()},
                     {"misclassified", n_wrong},
                     {"spec", spec_to_json(meta.spec())}};
  if (const FrozenBaseModel* base = source.base()) {
    const Matrix base_probs = base_predict(*base, test.inputs);
    std::vector<bool> base_wrong(test.size());
    std::size_t n_base_wrong = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      base_wrong[i] = argmax(base_probs.row(i)) != test.labels[i];
      n_base_wrong += base_wrong[i];
    }
    report.metadata["base_accuracy"] =
        1.0 - static_cast<double>(n_base_wrong) / static_cast<double>(test.size());
    if (n_base_wrong > 0 && n_base_wrong < test.size()) {
      for (auto kind : kBaselines) {
        const auto [neg, pos] = partition(base_scores(base_probs, kind), base_wrong);
        report.baseline.push_back(evaluate(baseline_name(kind), neg, pos));
      }
    }
  }
  if (options.dump_alpha) {
    report.alpha_dump.emplace();
    append_alpha(*report.alpha_dump, la);
  }
  return report;
}

TrainedReport run_transfer(const FeatureCache& target_train, const FeatureCache& target_test,
                           const FeatureCache& ood, const MetaModelSpec& spec,
                           const MetaTrainConfig& cfg, std::span<const MetricKind> metrics,
                           const ReportOptions& options) {
  target_train.validate();
  check_cache(target_test, target_train, "target test");
  check_cache(ood, target_train, "OOD");
  const std::vector<std::size_t> expected =
      uses_final_tap_only(spec.mode) ? std::vector<std::size_t>{target_train.tap_dims.back()}
                                     : target_train.tap_dims;
  if (spec.tap_dims != expected || spec.num_classes != target_train.num_classes)
    throw FormatError("transfer: meta spec does not match the cache schema");

  const TapSource source = TapSource::cached(target_train.tap_dims);
  const Dataset train = cache_to_dataset(target_train, "target-train");
  const Dataset test = cache_to_dataset(target_test, "target-test");
  Dataset ood_set = cache_to_dataset(ood, "ood");
  std::fill(ood_set.labels.begin(), ood_set.labels.end(), ood_set.ood_label());

  MetaModel initial = build_meta(spec, derive_seed(cfg.sgd.seed, streams::kInit));
  TrainedMeta trained = train_meta(std::move(initial), source, train, cfg);
  ExperimentReport report = run_ood(trained.model, source, test, ood_set, metrics, options);
  report.task = "transfer";
  report.metadata["training"] = training_to_json(trained);
  return {std::move(trained), std::move(report)};
}

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kFull: return "full";
    case AblationMode::kLinearMeta: return "linear_meta";
    case AblationMode::kCrossEnt: return "cross_ent";
    case AblationMode::kLastLayer: return "last_layer";
    case AblationMode::kTenPercentData: return "ten_percent_data";
  }
  return "unknown";
}

std::optional<AblationMode> parse_ablation_mode(std::string_view name) {
  for (auto m : {AblationMode::kFull, AblationMode::kLinearMeta, AblationMode::kCrossEnt,
                 AblationMode::kLastLayer, AblationMode::kTenPercentData}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

AblationSetup ablation_setup(AblationMode mode, std::span<const std::size_t> source_tap_dims,
                             std::size_t num_classes, const MetaTrainConfig& base_cfg) {
  AblationSetup setup;
  setup.cfg = base_cfg;
  MetaMode meta_mode = MetaMode::kDirichlet;
  switch (mode) {
    case AblationMode::kFull: break;
    case AblationMode::kLinearMeta: meta_mode = MetaMode::kLinearMeta; break;
    case AblationMode::kCrossEnt: meta_mode = MetaMode::kCrossEnt; break;
    case AblationMode::kLastLayer: meta_mode = MetaMode::kLastLayer; break;
    case AblationMode::kTenPercentData: setup.cfg.data_fraction = 0.1; break;
  }
  setup.spec = MetaModelSpec::for_taps(source_tap_dims, num_classes, meta_mode);
  if (uses_elbo(meta_mode)) {
    setup.default_metrics = default_ood_metrics();
  } else {
    // Softmax outputs carry no meaningful concentration, so only the entropy
    // of the predictive mean is used.
    setup.cfg.ood_score = MetricKind::kEntropy;
    setup.default_metrics = {MetricKind::kEntropy};
  }
  return setup;
}

TrainedReport run_ablation(AblationMode mode, const TapSource& source, const Dataset& train,
                           const Dataset& id_test, const Dataset& ood_test,
                           const MetaTrainConfig& base_cfg, std::span<const MetricKind> metrics,
                           const ReportOptions& options) {
  const AblationSetup setup = ablation_setup(mode, source.tap_dims(), train.num_classes, base_cfg);
  MetaModel initial = build_meta(setup.spec, derive_seed(setup.cfg.sgd.seed, streams::kInit));
  TrainedMeta trained = train_meta(std::move(initial), source, train, setup.cfg);
  const std::span<const MetricKind> chosen =
      metrics.empty() ? std::span<const MetricKind>(setup.default_metrics) : metrics;
  ExperimentReport report = run_ood(trained.model, source, id_test, ood_test, chosen, options);
  report.task = "ablate";
  report.metadata["mode"] = std::string(to_string(mode));
  report.metadata["data_fraction"] = setup.cfg.data_fraction;
  report.metadata["n_used"] = trained.n_used;
  report.metadata["training"] = training_to_json(trained);
  return {std::move(trained), std::move(report)};
}

}  // namespace puq
