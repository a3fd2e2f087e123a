#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "puq/dataio/dataset.hpp"
#include "puq/numkernel/matrix.hpp"

namespace puq {

enum class CorruptionKind {
  kPixelPermutation,
  kGaussianBlur,
  kContrastRescale,
  kGaussianNoise,
};

std::string_view to_string(CorruptionKind kind);
std::optional<CorruptionKind> parse_corruption(std::string_view name);

struct CorruptionConfig {
  bool pixel_permutation = true;
  bool gaussian_blur = false;
  bool contrast_rescale = true;
  bool gaussian_noise = true;
  double blur_sigma = 2.0;        // 5-tap separable kernel
  double contrast_factor = 0.3;
  double noise_scale = 2.0;       // multiples of each feature's batch std
  std::optional<ImageShape> image_shape;
  // Overrides the seeded permutation (mainly for controls and tests).
  std::optional<std::vector<std::size_t>> fixed_permutation;

  bool enabled(CorruptionKind kind) const;
  std::vector<CorruptionKind> enabled_kinds() const;
  void validate() const;

  // Flat vectors: permutation, contrast, additive noise.
  static CorruptionConfig for_vectors();
  // Images: permutation, blur, contrast.
  static CorruptionConfig for_images(ImageShape shape);
};

// Applies one corruption to every row of the batch. Deterministic given
// (config, seed); batch shape is preserved.
Matrix corrupt(const Matrix& batch, const CorruptionConfig& config, CorruptionKind kind,
               std::uint64_t seed);

}  // namespace puq
