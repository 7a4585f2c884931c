#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "smartfl/core_math.hpp"

namespace smartfl {

/// Labeled examples. Rows of `inputs` are samples.
struct Dataset {
  Matrix inputs;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_dim() const noexcept { return inputs.cols; }
  /// Throws InvalidArgument unless shapes agree and labels are in range.
  void validate() const;
  /// Samples at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Per-class sample counts.
  std::vector<std::size_t> class_counts() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// A minibatch, either labeled (`labels`) or carrying soft targets
/// (`targets`, row-stochastic, one row per sample).
struct Batch {
  Matrix inputs;
  std::vector<int> labels;
  std::optional<Matrix> targets;

  std::size_t size() const noexcept { return inputs.rows; }
  static Batch labeled(const Dataset& data, std::span<const std::size_t> indices);
  static Batch labeled(const Dataset& data);
};

}  // namespace smartfl
