#include "puq/evalharness/corruption.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "puq/error.hpp"
#include "puq/rng.hpp"

namespace puq {
namespace {

Matrix permute(const Matrix& batch, const CorruptionConfig& cfg, std::uint64_t seed) {
  const std::size_t d = batch.cols();
  std::vector<std::size_t> perm;
  if (cfg.fixed_permutation) {
    perm = *cfg.fixed_permutation;
    std::vector<std::size_t> check = perm;
    std::sort(check.begin(), check.end());
    bool valid = check.size() == d;
    for (std::size_t j = 0; valid && j < d; ++j) valid = check[j] == j;
    if (!valid) throw ConfigError("fixed_permutation is not a permutation of the feature axis");
  } else {
    perm.resize(d);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  Matrix out(batch.rows(), d);
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    const auto src = batch.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[perm[j]];
  }
  return out;
}

Matrix blur(const Matrix& batch, const CorruptionConfig& cfg) {
  const auto shape = *cfg.image_shape;
  const std::size_t h = shape.height;
  const std::size_t w = shape.width;
  std::array<double, 5> kernel{};
  double norm = 0.0;
  for (int k = -2; k <= 2; ++k) {
    kernel[k + 2] = std::exp(-static_cast<double>(k * k) / (2.0 * cfg.blur_sigma * cfg.blur_sigma));
    norm += kernel[k + 2];
  }
  for (double& v : kernel) v /= norm;
  auto clamp_index = [](long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
  };
  Matrix out(batch.rows(), batch.cols());
  std::vector<double> tmp(h * w);
  for (std::size_t s = 0; s < batch.rows(); ++s) {
    const auto src = batch.row(s);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k)
          acc += kernel[k + 2] * src[r * w + clamp_index(static_cast<long>(c) + k, w)];
        tmp[r * w + c] = acc;
      }
    auto dst = out.row(s);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k)
          acc += kernel[k + 2] * tmp[clamp_index(static_cast<long>(r) + k, h) * w + c];
        dst[r * w + c] = acc;
      }
  }
  return out;
}

Matrix contrast(const Matrix& batch, const CorruptionConfig& cfg) {
  Matrix out(batch.rows(), batch.cols());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    const auto src = batch.row(i);
    if (src.empty()) continue;
    const double mean = std::accumulate(src.begin(), src.end(), 0.0) / static_cast<double>(src.size());
    const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
    auto dst = out.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) {
      dst[j] = std::clamp(cfg.contrast_factor * src[j] + (1.0 - cfg.contrast_factor) * mean, *lo, *hi);
    }
  }
  return out;
}

Matrix add_noise(const Matrix& batch, const CorruptionConfig& cfg, std::uint64_t seed) {
  const std::size_t d = batch.cols();
  const double n = static_cast<double>(batch.rows());
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t i = 0; i < batch.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += batch(i, j) / n;
  for (std::size_t i = 0; i < batch.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (batch(i, j) - mean[j]) * (batch(i, j) - mean[j]) / n;
  for (double& v : sd) v = std::sqrt(v);
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix out = batch;
  for (std::size_t i = 0; i < batch.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) += cfg.noise_scale * sd[j] * unit(rng);
  return out;
}

}  // namespace

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kPixelPermutation: return "pixel_permutation";
    case CorruptionKind::kGaussianBlur: return "gaussian_blur";
    case CorruptionKind::kContrastRescale: return "contrast_rescale";
    case CorruptionKind::kGaussianNoise: return "gaussian_noise";
  }
  return "unknown";
}

std::optional<CorruptionKind> parse_corruption(std::string_view name) {
  for (auto k : {CorruptionKind::kPixelPermutation, CorruptionKind::kGaussianBlur,
                 CorruptionKind::kContrastRescale, CorruptionKind::kGaussianNoise}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

bool CorruptionConfig::enabled(CorruptionKind kind) const {
  switch (kind) {
    case CorruptionKind::kPixelPermutation: return pixel_permutation;
    case CorruptionKind::kGaussianBlur: return gaussian_blur;
    case CorruptionKind::kContrastRescale: return contrast_rescale;
    case CorruptionKind::kGaussianNoise: return gaussian_noise;
  }
  return false;
}

std::vector<CorruptionKind> CorruptionConfig::enabled_kinds() const {
  std::vector<CorruptionKind> out;
  for (auto k : {CorruptionKind::kPixelPermutation, CorruptionKind::kGaussianBlur,
                 CorruptionKind::kContrastRescale, CorruptionKind::kGaussianNoise}) {
    if (enabled(k)) out.push_back(k);
  }
  return out;
}

void CorruptionConfig::validate() const {
  if (enabled_kinds().empty()) throw ConfigError("corruption: at least one corruption must be enabled");
  if (gaussian_blur && !image_shape) throw ConfigError("corruption: gaussian_blur requires image_shape");
  if (!(blur_sigma > 0.0)) throw ConfigError("corruption: blur_sigma must be > 0");
  if (!(contrast_factor >= 0.0)) throw ConfigError("corruption: contrast_factor must be >= 0");
  if (!(noise_scale >= 0.0)) throw ConfigError("corruption: noise_scale must be >= 0");
}

CorruptionConfig CorruptionConfig::for_vectors() { return CorruptionConfig{}; }

CorruptionConfig CorruptionConfig::for_images(ImageShape shape) {
  CorruptionConfig cfg;
  cfg.gaussian_blur = true;
  cfg.gaussian_noise = false;
  cfg.image_shape = shape;
  return cfg;
}

Matrix corrupt(const Matrix& batch, const CorruptionConfig& config, CorruptionKind kind,
               std::uint64_t seed) {
  if (!config.enabled(kind)) {
    throw ConfigError("corrupt: " + std::string(to_string(kind)) + " is not enabled");
  }
  switch (kind) {
    case CorruptionKind::kPixelPermutation:
      return permute(batch, config, seed);
    case CorruptionKind::kGaussianBlur:
      if (!config.image_shape) throw ConfigError("corrupt: gaussian_blur requires image_shape");
      if (config.image_shape->height * config.image_shape->width != batch.cols())
        throw ShapeError("corrupt: image_shape does not match the sample dimension");
      return blur(batch, config);
    case CorruptionKind::kContrastRescale:
      return contrast(batch, config);
    case CorruptionKind::kGaussianNoise:
      return add_noise(batch, config, seed);
  }
  return batch;
}

}  // namespace puq
