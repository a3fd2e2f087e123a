#include "puq/basemodel/tap_source.hpp"

#include <numeric>

#include "puq/error.hpp"

namespace puq {

TapSource TapSource::live(const FrozenBaseModel& base) {
  return TapSource(&base, base.spec().tap_dims());
}

TapSource TapSource::cached(std::vector<std::size_t> tap_dims) {
  if (tap_dims.empty()) throw ConfigError("cached tap source needs at least one tap");
  return TapSource(nullptr, std::move(tap_dims));
}

std::size_t TapSource::input_dim() const {
  if (base_ != nullptr) return base_->spec().input_dim;
  return std::accumulate(tap_dims_.begin(), tap_dims_.end(), std::size_t{0});
}

TapBatch TapSource::extract(const Matrix& inputs) const {
  if (base_ != nullptr) return extract_taps(*base_, inputs);
  return hsplit(inputs, tap_dims_);
}

FeatureCache make_feature_cache(const FrozenBaseModel& base, const Dataset& data) {
  FeatureCache cache;
  cache.tap_dims = base.spec().tap_dims();
  cache.num_classes = base.spec().num_classes;
  cache.labels = data.labels;
  cache.taps = extract_taps(base, data.inputs);
  return cache;
}

}  // namespace puq
