#pragma once

#include <span>
#include <vector>

namespace puq {

// Positive = OOD or misclassified, negative = in-distribution or correct.
struct ScoredSample {
  double score = 0.0;
  bool positive = false;
};

std::vector<ScoredSample> make_scored(std::span<const double> negatives,
                                      std::span<const double> positives);

// Mann-Whitney statistic: fraction of (positive, negative) pairs ordered
// correctly, ties credited 1/2. Needs both classes (DegenerateError otherwise).
double auroc(std::span<const ScoredSample> samples);

// Non-interpolated average precision. Samples are ranked by descending score;
// equal scores keep input order. Needs at least one positive.
double aupr(std::span<const ScoredSample> samples);

}  // namespace puq
