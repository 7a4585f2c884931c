#include "smartfl/client.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smartfl/errors.hpp"

namespace smartfl {

void LocalConfig::validate() const {
  if (epochs == 0) throw ConfigError("local: epochs must be positive");
  if (batch_size == 0) throw ConfigError("local: batch_size must be positive");
  if (!(optimizer.lr >= 0.0)) throw ConfigError("local: lr must be non-negative");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("local: adam betas must lie in [0, 1)");
  }
  if (!(optimizer.eps > 0.0)) throw ConfigError("local: adam eps must be positive");
  if (!(prox_mu >= 0.0)) throw ConfigError("local: prox_mu must be >= 0");
}

ClientUpdate local_update(const ModelSpec& spec, std::span<const double> global,
                          const Dataset& shard, const LocalConfig& cfg, SeededRng& rng,
                          int client_id) {
  if (shard.size() == 0) throw InvalidArgument("local_update: empty shard");
  if (global.size() != spec.param_count()) {
    throw InvalidArgument("local_update: global model has wrong length");
  }
  ClientUpdate out{ParamVector(global.begin(), global.end()), shard.size(), client_id};
  Optimizer opt(cfg.optimizer, global.size());
  std::vector<std::size_t> order(shard.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const Batch batch = Batch::labeled(
          shard, std::span<const std::size_t>(order.data() + start, stop - start));
      LossGrad lg = ce_loss_and_grad(spec, out.params, batch);
      if (cfg.prox_mu > 0.0) {
        double drift = 0.0;
        for (std::size_t i = 0; i < lg.grad.size(); ++i) {
          const double diff = out.params[i] - global[i];
          drift += diff * diff;
          lg.grad[i] += cfg.prox_mu * diff;
        }
        lg.loss += 0.5 * cfg.prox_mu * drift;
      }
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("client " + std::to_string(client_id) + ": non-finite loss at epoch " +
                              std::to_string(epoch) + ", step " + std::to_string(step));
      }
      opt.step(out.params, lg.grad);
    }
  }
  if (!all_finite(out.params)) {
    throw DivergenceError("client " + std::to_string(client_id) + ": non-finite parameters");
  }
  return out;
}

Matrix ensemble_logits(std::span<const ClientUpdate> clients, const ModelSpec& spec,
                       const Matrix& inputs, double temperature) {
  if (clients.empty()) throw InvalidArgument("ensemble_logits: no clients");
  Matrix avg(inputs.rows, spec.num_classes, 0.0);
  for (const auto& c : clients) {
    const Matrix probs = softmax_rows(forward(spec, c.params, inputs), temperature);
    for (std::size_t i = 0; i < avg.data.size(); ++i) avg.data[i] += probs.data[i];
  }
  if (clients.size() > 1) {
    const double n = static_cast<double>(clients.size());
    for (auto& x : avg.data) x /= n;
  }
  return avg;
}

}  // namespace smartfl
