#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "puq/dataio/dataset.hpp"
#include "puq/numkernel/matrix.hpp"

namespace puq {

// Per-sample tap activations computed by some (possibly external) base
// model. Stored on disk as "PUQF" v1:
//   magic "PUQF" | u32 version | u32 n_samples | u32 n_taps | u32 dims[n_taps]
//   | u32 n_classes | n_samples x (u32 label, sum(dims) x f32)
// all little-endian. A label equal to n_classes marks an OOD sample.
struct FeatureCache {
  std::vector<std::size_t> tap_dims;
  std::size_t num_classes = 0;
  std::vector<std::size_t> labels;
  std::vector<Matrix> taps;  // one N x dims[j] block per tap

  std::size_t size() const { return labels.size(); }
  void validate() const;
};

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

std::vector<std::uint8_t> encode_feature_cache(const FeatureCache& cache);
FeatureCache decode_feature_cache(std::span<const std::uint8_t> bytes,
                                  const std::string& source = "<memory>");
void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache);
FeatureCache read_feature_cache(const std::filesystem::path& path);

// Rounds every feature to the nearest real32, i.e. what a write/read cycle yields.
FeatureCache quantize_real32(FeatureCache cache);

// Row-wise concatenation of the taps as a Dataset; pairs with a cached
// TapSource that splits the columns back apart.
Dataset cache_to_dataset(const FeatureCache& cache, std::string name);

}  // namespace puq
