#pragma once

#include <vector>

#include "puq/basemodel/tap_source.hpp"
#include "puq/metamodel/meta_model.hpp"
#include "puq/metamodel/train_meta.hpp"
#include "puq/uqmetrics/metrics.hpp"

namespace puq {

// Meta-model output for every row of `inputs`. Rows are evaluated in
// parallel chunks; results do not depend on the thread count.
Matrix meta_log_alpha(const MetaModel& meta, const TapSource& source, const Matrix& inputs);

// One uncertainty score per input row, in input order.
std::vector<double> score_dataset(const MetaModel& meta, const TapSource& source,
                                  const Matrix& inputs, MetricKind kind);
std::vector<double> score_dataset(const TrainedMeta& meta, const TapSource& source,
                                  const Matrix& inputs, MetricKind kind);

}  // namespace puq
