#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "smartfl/client.hpp"
#include "smartfl/core_math.hpp"
#include "smartfl/dataset.hpp"
#include "smartfl/models.hpp"
#include "smartfl/optim.hpp"
#include "smartfl/rng.hpp"

namespace smartfl {

enum class Strategy {
  kFedAvg,
  kSmartFl,
  kSmartFlU,
  kFinetune,
  kAbAvg,
  kKrum,
  kMedian,
  kTrimmedMean,
};

std::string to_string(Strategy s);
/// Throws ConfigError on unknown names.
Strategy strategy_from_string(const std::string& name);
bool needs_labeled_proxy(Strategy s);
bool needs_proxy(Strategy s);

struct AggregationConfig {
  Strategy strategy = Strategy::kFedAvg;
  // Coefficient optimization (smartfl / smartfl_u).
  std::size_t server_epochs = 20;
  double server_lr = 1e-2;
  std::size_t server_batch = 32;
  OptimizerKind server_optimizer = OptimizerKind::kAdam;
  double kl_temperature = 1.0;
  // Full-space finetuning.
  std::size_t finetune_epochs = 20;
  double finetune_lr = 1e-3;
  // Robust baselines.
  double trim_beta = 0.2;
  std::size_t krum_f = 0;

  void validate() const;
};

struct AggregationResult {
  ParamVector global;
  std::optional<CoefficientVector> coefficients;
  std::optional<double> proxy_loss_before;
  std::optional<double> proxy_loss_after;
};

/// Sample-count weighted average.
AggregationResult fedavg(std::span<const ClientUpdate> clients);

/// Projected minibatch descent on the mixing coefficients, starting from the
/// FedAVG weights, minimizing cross-entropy on `proxy`. The returned point is
/// the best of {initial weights, optimized weights, each single client} under
/// the full-proxy loss, earlier candidates winning ties, so the result is
/// never worse on the proxy than FedAVG or any individual client.
AggregationResult smartfl(std::span<const ClientUpdate> clients, const Dataset& proxy,
                          const ModelSpec& spec, const AggregationConfig& cfg, SeededRng& rng);

/// smartfl with an unlabeled proxy: the loss is KL divergence to the
/// clients' averaged softmax predictions, computed once per call.
AggregationResult smartfl_u(std::span<const ClientUpdate> clients, const Matrix& proxy_inputs,
                            const ModelSpec& spec, const AggregationConfig& cfg, SeededRng& rng);

/// FedAVG followed by Adam on all parameters against proxy cross-entropy.
AggregationResult finetune_fullspace(std::span<const ClientUpdate> clients, const Dataset& proxy,
                                     const ModelSpec& spec, const AggregationConfig& cfg,
                                     SeededRng& rng);

/// Coefficients proportional to each client's proxy accuracy; uniform if all are zero.
AggregationResult abavg(std::span<const ClientUpdate> clients, const Dataset& proxy,
                        const ModelSpec& spec);

/// Client minimizing the summed squared distance to its n - f - 2 nearest
/// neighbours. Requires n >= 2f + 3.
AggregationResult krum(std::span<const ClientUpdate> clients, std::size_t f);

AggregationResult coord_median(std::span<const ClientUpdate> clients);

/// Drops floor(beta * n) largest and smallest values per coordinate.
AggregationResult trimmed_mean(std::span<const ClientUpdate> clients, double beta);

/// Dispatches on cfg.strategy. `proxy` may be null for strategies that do not use it.
AggregationResult aggregate(std::span<const ClientUpdate> clients, const Dataset* proxy,
                            const ModelSpec& spec, const AggregationConfig& cfg, SeededRng& rng);

}  // namespace smartfl
