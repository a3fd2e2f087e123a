#include "puq/uqmetrics/scoring.hpp"

#include <algorithm>

#include "puq/error.hpp"
#include "puq/parallel.hpp"

namespace puq {

Matrix meta_log_alpha(const MetaModel& meta, const TapSource& source, const Matrix& inputs) {
  const std::size_t k = meta.spec().num_classes;
  Matrix out(inputs.rows(), k);
  if (inputs.rows() == 0) return out;
  if (inputs.cols() != source.input_dim()) {
    throw ShapeError("score: sample 0 has dim " + std::to_string(inputs.cols()) + ", expected " +
                     std::to_string(source.input_dim()));
  }
  parallel_for_chunks(inputs.rows(), [&](std::size_t begin, std::size_t end) {
    const Matrix chunk = meta_forward(meta, source.extract(slice_rows(inputs, begin, end)));
    std::copy(chunk.data().begin(), chunk.data().end(), out.row(begin).begin());
  });
  return out;
}

std::vector<double> score_dataset(const MetaModel& meta, const TapSource& source,
                                  const Matrix& inputs, MetricKind kind) {
  if (inputs.rows() == 0) return {};
  return scores_from_log_alpha(meta_log_alpha(meta, source, inputs), kind);
}

std::vector<double> score_dataset(const TrainedMeta& meta, const TapSource& source,
                                  const Matrix& inputs, MetricKind kind) {
  return score_dataset(meta.model, source, inputs, kind);
}

}  // namespace puq
