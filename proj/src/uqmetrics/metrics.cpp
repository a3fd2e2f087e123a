#include "puq/uqmetrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "puq/basemodel/base_model.hpp"

namespace puq {

MetricCategory category(MetricKind kind) {
  switch (kind) {
    case MetricKind::kEntropy:
    case MetricKind::kMaxProb:
      return MetricCategory::kTotal;
    case MetricKind::kDifferentialEntropy:
    case MetricKind::kMutualInformation:
    case MetricKind::kPrecision:
      return MetricCategory::kEpistemic;
  }
  return MetricCategory::kTotal;
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kEntropy: return "entropy";
    case MetricKind::kMaxProb: return "max_prob";
    case MetricKind::kDifferentialEntropy: return "differential_entropy";
    case MetricKind::kMutualInformation: return "mutual_information";
    case MetricKind::kPrecision: return "precision";
  }
  return "unknown";
}

std::string_view to_string(MetricCategory c) {
  return c == MetricCategory::kTotal ? "total" : "epistemic";
}

std::optional<MetricKind> parse_metric(std::string_view name) {
  for (auto kind : kAllMetrics) {
    if (name == to_string(kind)) return kind;
  }
  if (name == "ent") return MetricKind::kEntropy;
  if (name == "maxp") return MetricKind::kMaxProb;
  if (name == "dent") return MetricKind::kDifferentialEntropy;
  if (name == "mi") return MetricKind::kMutualInformation;
  if (name == "prec") return MetricKind::kPrecision;
  return std::nullopt;
}

std::vector<MetricKind> default_ood_metrics() {
  return {MetricKind::kMutualInformation, MetricKind::kDifferentialEntropy,
          MetricKind::kPrecision};
}

std::vector<MetricKind> default_misclass_metrics() {
  return {MetricKind::kEntropy, MetricKind::kMaxProb};
}

double uncertainty_score(const DirichletParams& raw, MetricKind kind) {
  // Every score is a symmetric function of alpha. Evaluating it on the sorted
  // vector fixes the summation order, so relabelling classes cannot change
  // a single bit of the result.
  std::vector<double> sorted(raw.alpha().begin(), raw.alpha().end());
  std::sort(sorted.begin(), sorted.end());
  const DirichletParams params(std::move(sorted));
  switch (kind) {
    case MetricKind::kEntropy:
      return shannon_entropy(predictive_mean(params));
    case MetricKind::kMaxProb: {
      const auto alpha = params.alpha();
      return 1.0 - *std::max_element(alpha.begin(), alpha.end()) / params.precision();
    }
    case MetricKind::kDifferentialEntropy:
      return differential_entropy(params);
    case MetricKind::kMutualInformation:
      return shannon_entropy(predictive_mean(params)) - expected_categorical_entropy(params);
    case MetricKind::kPrecision:
      return -params.precision();
  }
  return 0.0;
}

std::vector<double> scores_from_log_alpha(const Matrix& log_alpha, MetricKind kind) {
  std::vector<double> out(log_alpha.rows());
  for (std::size_t i = 0; i < log_alpha.rows(); ++i) {
    out[i] = uncertainty_score(DirichletParams::from_log_alpha(log_alpha.row(i)), kind);
  }
  return out;
}

}  // namespace puq
