#include "smartfl/dataset.hpp"

#include <algorithm>
#include <string>

#include "smartfl/errors.hpp"

namespace smartfl {

void Dataset::validate() const {
  if (inputs.rows != labels.size()) {
    throw InvalidArgument("dataset: " + std::to_string(inputs.rows) + " input rows vs " +
                          std::to_string(labels.size()) + " labels");
  }
  if (num_classes < 2) throw InvalidArgument("dataset: need at least 2 classes");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InvalidArgument("dataset: label " + std::to_string(y) + " out of range");
    }
  }
  if (!all_finite(inputs.data)) throw InvalidArgument("dataset: non-finite input");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.inputs = Matrix(indices.size(), inputs.cols);
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw InvalidArgument("dataset subset: index out of range");
    auto from = inputs.row(src);
    std::copy(from.begin(), from.end(), out.inputs.row(i).begin());
    out.labels.push_back(labels[src]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

Batch Batch::labeled(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset sub = data.subset(indices);
  return Batch{std::move(sub.inputs), std::move(sub.labels), std::nullopt};
}

Batch Batch::labeled(const Dataset& data) { return Batch{data.inputs, data.labels, std::nullopt}; }

}  // namespace smartfl
