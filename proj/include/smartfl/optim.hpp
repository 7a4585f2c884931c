#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smartfl {

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First-order optimizer with per-instance state. Adam moments start at zero
/// and are bias-corrected.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::size_t dim);

  /// params -= step(grad)
  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace smartfl
