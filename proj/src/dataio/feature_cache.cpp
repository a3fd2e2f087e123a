#include "puq/dataio/feature_cache.hpp"

#include <cmath>
#include <limits>

#include "puq/dataio/binary_io.hpp"
#include "puq/error.hpp"

namespace puq {
namespace {

constexpr std::string_view kMagic = "PUQF";

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(std::string("feature cache: ") + what + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void FeatureCache::validate() const {
  if (tap_dims.empty()) throw FormatError("feature cache: no taps");
  if (taps.size() != tap_dims.size()) throw FormatError("feature cache: tap block count mismatch");
  for (std::size_t j = 0; j < taps.size(); ++j) {
    if (taps[j].rows() != labels.size() || taps[j].cols() != tap_dims[j]) {
      throw FormatError("feature cache: tap " + std::to_string(j) + " block has wrong shape");
    }
    if (!all_finite(taps[j].data())) {
      throw NumericError("feature cache: non-finite value in tap " + std::to_string(j));
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > num_classes) {
      throw FormatError("feature cache: label " + std::to_string(labels[i]) + " of sample " +
                        std::to_string(i) + " exceeds class count");
    }
  }
}

std::vector<std::uint8_t> encode_feature_cache(const FeatureCache& cache) {
  cache.validate();
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kFeatureCacheVersion);
  w.u32(to_u32(cache.size(), "n_samples"));
  w.u32(to_u32(cache.tap_dims.size(), "n_taps"));
  for (auto d : cache.tap_dims) w.u32(to_u32(d, "tap dim"));
  w.u32(to_u32(cache.num_classes, "n_classes"));
  for (std::size_t i = 0; i < cache.size(); ++i) {
    w.u32(to_u32(cache.labels[i], "label"));
    for (const auto& tap : cache.taps) {
      for (double v : tap.row(i)) {
        const float f = static_cast<float>(v);
        if (!std::isfinite(f)) {
          throw NumericError("feature cache: value of sample " + std::to_string(i) +
                             " is not representable as a finite real32");
        }
        w.f32(f);
      }
    }
  }
  return w.release();
}

FeatureCache decode_feature_cache(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kFeatureCacheVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  const std::uint32_t n_taps = r.u32();
  if (n_taps == 0) r.fail("zero taps");
  FeatureCache cache;
  std::size_t row_width = 0;
  for (std::uint32_t j = 0; j < n_taps; ++j) {
    const std::uint32_t d = r.u32();
    if (d == 0) r.fail("zero tap dimension");
    cache.tap_dims.push_back(d);
    row_width += d;
  }
  cache.num_classes = r.u32();
  const std::size_t record = 4 + 4 * row_width;
  if (r.remaining() / record < n || r.remaining() != static_cast<std::size_t>(n) * record) {
    r.fail("payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
           std::to_string(static_cast<std::size_t>(n) * record));
  }
  for (auto d : cache.tap_dims) cache.taps.emplace_back(n, d);
  cache.labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t label = r.u32();
    if (label > cache.num_classes) r.fail("label " + std::to_string(label) + " exceeds class count");
    cache.labels.push_back(label);
    for (auto& tap : cache.taps) {
      for (double& v : tap.row(i)) {
        const float f = r.f32();
        if (!std::isfinite(f)) {
          throw NumericError(source + ": non-finite feature at byte offset " +
                             std::to_string(r.offset() - 4));
        }
        v = f;
      }
    }
  }
  r.expect_end();
  return cache;
}

void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache) {
  write_file_atomic(path, encode_feature_cache(cache));
}

FeatureCache read_feature_cache(const std::filesystem::path& path) {
  return decode_feature_cache(read_file_bytes(path), path.string());
}

FeatureCache quantize_real32(FeatureCache cache) {
  for (auto& tap : cache.taps)
    for (double& v : tap.data()) v = static_cast<double>(static_cast<float>(v));
  return cache;
}

Dataset cache_to_dataset(const FeatureCache& cache, std::string name) {
  Dataset out;
  out.inputs = hconcat(cache.taps);
  out.labels = cache.labels;
  out.num_classes = cache.num_classes;
  out.name = std::move(name);
  return out;
}

}  // namespace puq
