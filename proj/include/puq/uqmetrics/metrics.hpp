#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "puq/dirichlet/dirichlet.hpp"
#include "puq/numkernel/matrix.hpp"

namespace puq {

// Uncertainty measures on a Dirichlet output. Every score is oriented so that
// larger means more uncertain: MaxProb is reported as 1 - max p and Precision
// as -alpha_0.
enum class MetricKind {
  kEntropy,
  kMaxProb,
  kDifferentialEntropy,
  kMutualInformation,
  kPrecision,
};

enum class MetricCategory { kTotal, kEpistemic };

MetricCategory category(MetricKind kind);
std::string_view to_string(MetricKind kind);
std::string_view to_string(MetricCategory category);
// Accepts the canonical names and the short forms ent, maxp, dent, mi, prec.
std::optional<MetricKind> parse_metric(std::string_view name);

inline constexpr std::array<MetricKind, 5> kAllMetrics = {
    MetricKind::kEntropy, MetricKind::kMaxProb, MetricKind::kDifferentialEntropy,
    MetricKind::kMutualInformation, MetricKind::kPrecision};

// Epistemic metrics for OOD detection, total-uncertainty metrics for
// misclassification detection.
std::vector<MetricKind> default_ood_metrics();
std::vector<MetricKind> default_misclass_metrics();

double uncertainty_score(const DirichletParams& params, MetricKind kind);

// One score per row of a log-alpha matrix.
std::vector<double> scores_from_log_alpha(const Matrix& log_alpha, MetricKind kind);

}  // namespace puq
