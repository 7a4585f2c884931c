#pragma once

#include <cstddef>
#include <span>

#include "smartfl/core_math.hpp"
#include "smartfl/dataset.hpp"
#include "smartfl/models.hpp"
#include "smartfl/optim.hpp"
#include "smartfl/rng.hpp"

namespace smartfl {

/// Local training hyperparameters. prox_mu > 0 adds the FedProx term
/// (prox_mu / 2) * ||w - global||^2 to every minibatch loss.
struct LocalConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer{};
  double prox_mu = 0.0;

  void validate() const;
};

struct ClientUpdate {
  ParamVector params;
  std::size_t sample_count = 0;
  int client_id = -1;
};

/// Runs `cfg.epochs` passes over `shard` starting from `global`. Each epoch
/// visits a fresh seeded permutation in minibatches, keeping the last partial
/// batch. Optimizer state is local to the call.
ClientUpdate local_update(const ModelSpec& spec, std::span<const double> global,
                          const Dataset& shard, const LocalConfig& cfg, SeededRng& rng,
                          int client_id = -1);

/// Mean of the clients' softmax outputs on `inputs` (rows sum to one).
Matrix ensemble_logits(std::span<const ClientUpdate> clients, const ModelSpec& spec,
                       const Matrix& inputs, double temperature = 1.0);

}  // namespace smartfl
