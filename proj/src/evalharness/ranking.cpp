#include "puq/evalharness/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "puq/error.hpp"

namespace puq {
namespace {

void require_finite_scores(std::span<const ScoredSample> samples, const char* fn) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].score)) {
      throw NumericError(std::string(fn) + ": non-finite score at index " + std::to_string(i));
    }
  }
}

}  // namespace

std::vector<ScoredSample> make_scored(std::span<const double> negatives,
                                      std::span<const double> positives) {
  std::vector<ScoredSample> out;
  out.reserve(negatives.size() + positives.size());
  for (double s : negatives) out.push_back({s, false});
  for (double s : positives) out.push_back({s, true});
  return out;
}

double auroc(std::span<const ScoredSample> samples) {
  require_finite_scores(samples, "auroc");
  std::size_t n_pos = 0;
  for (const auto& s : samples) n_pos += s.positive ? 1 : 0;
  const std::size_t n_neg = samples.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DegenerateError("auroc: need at least one positive and one negative sample (got " +
                          std::to_string(n_pos) + " positive, " + std::to_string(n_neg) +
                          " negative)");
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });
  // Sum of mid-ranks over positives; every quantity is an exact half-integer.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (samples[order[t]].positive) rank_sum += mid_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(n_pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

double aupr(std::span<const ScoredSample> samples) {
  require_finite_scores(samples, "aupr");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a].score > samples[b].score; });
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (samples[order[r]].positive) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(r + 1);
    }
  }
  if (tp == 0) throw DegenerateError("aupr: need at least one positive sample");
  return ap / static_cast<double>(tp);
}

}  // namespace puq
