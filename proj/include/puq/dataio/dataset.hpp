#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "puq/numkernel/matrix.hpp"

namespace puq {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  bool operator==(const ImageShape&) const = default;
};

// Labelled samples, one row per sample. OOD sets carry the sentinel label
// `num_classes` on every row.
struct Dataset {
  Matrix inputs;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::string name;
  std::optional<ImageShape> image_shape;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.cols(); }
  std::size_t ood_label() const { return num_classes; }

  // Throws InputError if labels fall outside [0, K) (or [0, K] when
  // `allow_sentinel`), the set is empty, or inputs are non-finite.
  void validate(bool allow_sentinel = false) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  // Same rows with new inputs (e.g. after corruption).
  Dataset with_inputs(Matrix inputs, std::string name) const;
};

std::vector<std::size_t> class_counts(const Dataset& data);

// Disjoint, class-stratified, seeded partition. Split i receives
// floor(fractions[i] * N) rows; when the fractions sum to 1 the leftover rows
// go to the first split.
std::vector<Dataset> split(const Dataset& data, std::span<const double> fractions,
                           std::uint64_t seed);

// Class-stratified seeded subset of exactly `count` rows.
Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed);

// Seeded row permutation.
Dataset shuffled(const Dataset& data, std::uint64_t seed);

// Header row (x0..x{d-1},label), real64 columns, label last.
void write_csv(const Dataset& data, std::ostream& out);

}  // namespace puq
