#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "puq/dataio/dataset.hpp"

namespace puq {

struct GaussianMixtureConfig {
  std::vector<std::vector<double>> means;  // one d-dimensional mean per class
  double sigma = 1.0;
  std::size_t samples_per_class = 500;
  std::vector<double> ood_shift;           // displacement of the OOD cluster from the centroid
  std::size_t ood_samples = 300;

  std::size_t num_classes() const { return means.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  std::vector<double> centroid() const;
  void validate() const;

  // Three classes on an equilateral triangle of side 6 sigma centred at the
  // origin; the OOD cluster sits 10 sigma from the centroid, past the edge
  // opposite the top vertex.
  static GaussianMixtureConfig triangle(double sigma = 1.0, std::size_t samples_per_class = 500);
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Isotropic Gaussian samples per class with an exact 80/20 split per class.
TrainTestSplit gen_gaussian_mixture(const GaussianMixtureConfig& cfg, std::uint64_t seed);

// Single cluster at centroid + ood_shift; every label is the sentinel K.
Dataset gen_ood_shifted(const GaussianMixtureConfig& cfg, std::uint64_t seed);

}  // namespace puq
