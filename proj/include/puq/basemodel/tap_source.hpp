#pragma once

#include <cstddef>
#include <vector>

#include "puq/basemodel/base_model.hpp"
#include "puq/basemodel/taps.hpp"
#include "puq/dataio/feature_cache.hpp"

namespace puq {

// Where meta-model inputs come from: live extraction through a frozen base
// model, or pre-computed features whose columns are the concatenated taps
// (see cache_to_dataset). Live sources borrow the model; it must outlive them.
class TapSource {
 public:
  static TapSource live(const FrozenBaseModel& base);
  static TapSource cached(std::vector<std::size_t> tap_dims);

  TapBatch extract(const Matrix& inputs) const;
  const std::vector<std::size_t>& tap_dims() const { return tap_dims_; }
  std::size_t input_dim() const;
  const FrozenBaseModel* base() const { return base_; }

 private:
  TapSource(const FrozenBaseModel* base, std::vector<std::size_t> tap_dims)
      : base_(base), tap_dims_(std::move(tap_dims)) {}

  const FrozenBaseModel* base_ = nullptr;
  std::vector<std::size_t> tap_dims_;
};

// Runs every sample through the base model and records its taps.
FeatureCache make_feature_cache(const FrozenBaseModel& base, const Dataset& data);

}  // namespace puq
