#include "smartfl/optim.hpp"

#include <cmath>

#include "smartfl/errors.hpp"

namespace smartfl {

Optimizer::Optimizer(const OptimizerConfig& cfg, std::size_t dim) : cfg_(cfg) {
  if (cfg_.kind == OptimizerKind::kAdam) {
    m_.assign(dim, 0.0);
    v_.assign(dim, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw InvalidArgument("optimizer: gradient length mismatch");
  ++t_;
  if (cfg_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.lr * grad[i];
    return;
  }
  if (m_.size() != params.size()) throw InvalidArgument("optimizer: parameter length changed");
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
  }
}

}  // namespace smartfl
