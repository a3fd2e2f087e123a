#include "puq/evalharness/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "puq/error.hpp"
#include "puq/numkernel/loss.hpp"

namespace puq {

double ece(const Matrix& probabilities, std::span<const std::size_t> labels, std::size_t bins) {
  if (bins == 0) throw ConfigError("ece: bin count must be positive");
  if (labels.size() != probabilities.rows()) throw ShapeError("ece: label count mismatch");
  if (labels.empty()) return 0.0;
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> correct(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = probabilities.row(i);
    const std::size_t pred = argmax(row);
    const double conf = row[pred];
    const double scaled = std::ceil(conf * static_cast<double>(bins));
    const std::size_t b =
        std::min(bins - 1, static_cast<std::size_t>(std::max(1.0, scaled)) - 1);
    conf_sum[b] += conf;
    correct[b] += pred == labels[i] ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(labels.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    total += (nb / n) * std::abs(correct[b] / nb - conf_sum[b] / nb);
  }
  return total;
}

}  // namespace puq
