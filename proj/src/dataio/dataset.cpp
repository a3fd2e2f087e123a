#include "puq/dataio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <tuple>

#include "puq/error.hpp"
#include "puq/rng.hpp"

namespace puq {
namespace {

// Orders rows so that every contiguous window holds roughly the parent class
// proportions: each class is shuffled and its members spread evenly over [0, 1).
std::vector<std::size_t> stratified_order(const Dataset& data, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t k = data.num_classes + 1;  // room for the OOD sentinel
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[std::min(data.labels[i], k - 1)].push_back(i);
  }
  std::vector<std::tuple<double, std::uint64_t, std::size_t>> keyed;
  keyed.reserve(data.size());
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const double n = static_cast<double>(members.size());
    for (std::size_t r = 0; r < members.size(); ++r) {
      keyed.emplace_back((static_cast<double>(r) + 0.5) / n, rng(), members[r]);
    }
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> order;
  order.reserve(keyed.size());
  for (const auto& entry : keyed) order.push_back(std::get<2>(entry));
  return order;
}

}  // namespace

void Dataset::validate(bool allow_sentinel) const {
  if (labels.empty()) throw InputError("dataset '" + name + "' is empty");
  if (inputs.rows() != labels.size()) {
    throw ShapeError("dataset '" + name + "': " + std::to_string(inputs.rows()) +
                     " input rows but " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t limit = allow_sentinel ? num_classes + 1 : num_classes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= limit) {
      throw InputError("dataset '" + name + "': label " + std::to_string(labels[i]) +
                       " at row " + std::to_string(i) + " is outside [0, " +
                       std::to_string(num_classes) + ")");
    }
  }
  if (!all_finite(inputs.data())) throw InputError("dataset '" + name + "' has non-finite inputs");
  if (image_shape && image_shape->height * image_shape->width != dim()) {
    throw ShapeError("dataset '" + name + "': image shape does not match input dimension");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs = select_rows(inputs, indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.num_classes = num_classes;
  out.name = name;
  out.image_shape = image_shape;
  return out;
}

Dataset Dataset::with_inputs(Matrix new_inputs, std::string new_name) const {
  if (new_inputs.rows() != size()) throw ShapeError("with_inputs: row count mismatch");
  Dataset out = *this;
  out.inputs = std::move(new_inputs);
  out.name = std::move(new_name);
  return out;
}

std::vector<std::size_t> class_counts(const Dataset& data) {
  std::vector<std::size_t> counts(data.num_classes + 1, 0);
  for (auto y : data.labels) ++counts[std::min(y, data.num_classes)];
  counts.resize(data.num_classes);
  return counts;
}

std::vector<Dataset> split(const Dataset& data, std::span<const double> fractions,
                           std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split: fractions must be positive");
    sum += f;
  }
  if (sum > 1.0 + 1e-9) throw ConfigError("split: fractions sum to more than 1");
  const std::size_t n = data.size();
  constexpr double kSlack = 1e-9;
  std::vector<std::size_t> sizes;
  std::size_t assigned = 0;
  for (double f : fractions) {
    sizes.push_back(static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + kSlack)));
    assigned += sizes.back();
  }
  if (std::abs(sum - 1.0) <= 1e-9 && !sizes.empty()) sizes.front() += n - assigned;

  const auto order = stratified_order(data, seed);
  std::vector<Dataset> out;
  std::size_t offset = 0;
  for (auto size : sizes) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(offset),
                                 order.begin() + static_cast<std::ptrdiff_t>(offset + size));
    out.push_back(data.subset(idx));
    offset += size;
  }
  return out;
}

Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
  if (count > data.size()) throw ConfigError("subsample: count exceeds dataset size");
  const auto order = stratified_order(data, seed);
  std::vector<std::size_t> idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  return data.subset(idx);
}

Dataset shuffled(const Dataset& data, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return data.subset(idx);
}

void write_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.inputs.row(i)) out << v << ',';
    out << data.labels[i] << '\n';
  }
}

}  // namespace puq
