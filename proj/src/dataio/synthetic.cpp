#include "puq/dataio/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "puq/error.hpp"
#include "puq/rng.hpp"

namespace puq {

std::vector<double> GaussianMixtureConfig::centroid() const {
  std::vector<double> c(dim(), 0.0);
  for (const auto& m : means)
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += m[j] / static_cast<double>(means.size());
  return c;
}

void GaussianMixtureConfig::validate() const {
  if (means.size() < 2) throw ConfigError("gaussian mixture needs at least 2 classes");
  if (!(sigma > 0.0)) throw ConfigError("gaussian mixture sigma must be > 0");
  if (samples_per_class < 5) throw ConfigError("gaussian mixture needs >= 5 samples per class");
  for (const auto& m : means) {
    if (m.size() != dim()) throw ConfigError("gaussian mixture means have unequal dimension");
  }
  for (std::size_t a = 0; a < means.size(); ++a)
    for (std::size_t b = a + 1; b < means.size(); ++b)
      if (means[a] == means[b]) throw ConfigError("gaussian mixture means must be distinct");
  if (!ood_shift.empty() && ood_shift.size() != dim())
    throw ConfigError("ood_shift dimension does not match the means");
}

GaussianMixtureConfig GaussianMixtureConfig::triangle(double sigma, std::size_t samples_per_class) {
  GaussianMixtureConfig cfg;
  cfg.sigma = sigma;
  cfg.samples_per_class = samples_per_class;
  const double radius = 6.0 * sigma / std::sqrt(3.0);
  for (double deg : {90.0, 210.0, 330.0}) {
    const double rad = deg * std::numbers::pi / 180.0;
    cfg.means.push_back({radius * std::cos(rad), radius * std::sin(rad)});
  }
  cfg.ood_shift = {0.0, -10.0 * sigma};
  cfg.ood_samples = 300;
  return cfg;
}

TrainTestSplit gen_gaussian_mixture(const GaussianMixtureConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t k = cfg.num_classes();
  const std::size_t d = cfg.dim();
  const std::size_t n_train = cfg.samples_per_class * 4 / 5;
  const std::size_t n_test = cfg.samples_per_class - n_train;
  Rng rng = rng_for(seed, streams::kData);
  std::normal_distribution<double> noise(0.0, cfg.sigma);

  TrainTestSplit out;
  out.train.inputs = Matrix(k * n_train, d);
  out.test.inputs = Matrix(k * n_test, d);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
      const bool train = i < n_train;
      Dataset& dst = train ? out.train : out.test;
      const std::size_t row = train ? c * n_train + i : c * n_test + (i - n_train);
      auto x = dst.inputs.row(row);
      for (std::size_t j = 0; j < d; ++j) x[j] = cfg.means[c][j] + noise(rng);
      dst.labels.push_back(c);
    }
  }
  for (Dataset* ds : {&out.train, &out.test}) {
    ds->num_classes = k;
  }
  out.train.name = "gaussian-train";
  out.test.name = "gaussian-test";
  out.train = shuffled(out.train, derive_seed(seed, streams::kShuffle));
  out.test = shuffled(out.test, derive_seed(seed, streams::kShuffle + 100));
  return out;
}

Dataset gen_ood_shifted(const GaussianMixtureConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t d = cfg.dim();
  auto center = cfg.centroid();
  for (std::size_t j = 0; j < d && j < cfg.ood_shift.size(); ++j) center[j] += cfg.ood_shift[j];
  Rng rng = rng_for(seed, streams::kData + 1000);
  std::normal_distribution<double> noise(0.0, cfg.sigma);
  Dataset out;
  out.name = "gaussian-ood";
  out.num_classes = cfg.num_classes();
  out.inputs = Matrix(cfg.ood_samples, d);
  out.labels.assign(cfg.ood_samples, cfg.num_classes());
  for (std::size_t i = 0; i < cfg.ood_samples; ++i) {
    auto x = out.inputs.row(i);
    for (std::size_t j = 0; j < d; ++j) x[j] = center[j] + noise(rng);
  }
  return out;
}

}  // namespace puq
