#include "smartfl/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "smartfl/errors.hpp"

namespace smartfl {

namespace {

std::vector<ParamVector> params_of(std::span<const ClientUpdate> clients) {
  std::vector<ParamVector> out;
  out.reserve(clients.size());
  for (const auto& c : clients) out.push_back(c.params);
  return out;
}

void require_clients(std::span<const ClientUpdate> clients, const char* who) {
  if (clients.empty()) throw InvalidArgument(std::string(who) + ": no clients");
  const std::size_t d = clients.front().params.size();
  for (const auto& c : clients) {
    if (c.params.size() != d) throw InvalidArgument(std::string(who) + ": model length mismatch");
  }
}

CoefficientVector sample_weights(std::span<const ClientUpdate> clients) {
  std::vector<double> w;
  w.reserve(clients.size());
  double total = 0.0;
  for (const auto& c : clients) {
    w.push_back(static_cast<double>(c.sample_count));
    total += w.back();
  }
  if (!(total > 0.0)) throw InvalidArgument("fedavg: total sample count is zero");
  return CoefficientVector::from_weights(w);
}

// Proxy loss in either labeled (cross-entropy) or soft-target (KL) form.
class ProxyObjective {
 public:
  ProxyObjective(const ModelSpec& spec, Batch full, std::optional<double> kl_temperature)
      : spec_(spec), full_(std::move(full)), temperature_(kl_temperature) {}

  std::size_t size() const { return full_.size(); }

  double loss(std::span<const double> w) const {
    return temperature_ ? kl_loss(spec_, w, full_, *temperature_) : ce_loss(spec_, w, full_);
  }

  LossGrad loss_and_grad(std::span<const double> w, const Batch& b) const {
    return temperature_ ? kl_loss_and_grad(spec_, w, b, *temperature_)
                        : ce_loss_and_grad(spec_, w, b);
  }

  Batch minibatch(std::span<const std::size_t> idx) const {
    Batch b;
    b.inputs = Matrix(idx.size(), full_.inputs.cols);
    if (full_.targets) b.targets = Matrix(idx.size(), full_.targets->cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = full_.inputs.row(idx[i]);
      std::copy(src.begin(), src.end(), b.inputs.row(i).begin());
      if (!full_.labels.empty()) b.labels.push_back(full_.labels[idx[i]]);
      if (full_.targets) {
        auto t = full_.targets->row(idx[i]);
        std::copy(t.begin(), t.end(), b.targets->row(i).begin());
      }
    }
    return b;
  }

 private:
  const ModelSpec& spec_;
  Batch full_;
  std::optional<double> temperature_;
};

template <typename Fn>
void for_each_minibatch(std::size_t n, std::size_t batch_size, std::size_t epochs, SeededRng& rng,
                        Fn&& fn) {
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      fn(std::span<const std::size_t>(order.data() + start, stop - start));
    }
  }
}

AggregationResult optimize_coefficients(std::span<const ClientUpdate> clients,
                                        const ProxyObjective& objective,
                                        const AggregationConfig& cfg, SeededRng& rng) {
  const std::vector<ParamVector> models = params_of(clients);
  const std::size_t n = models.size();
  const CoefficientVector init = sample_weights(clients);

  std::vector<double> p = init.vector();
  OptimizerConfig opt_cfg;
  opt_cfg.kind = cfg.server_optimizer;
  opt_cfg.lr = cfg.server_lr;
  Optimizer opt(opt_cfg, n);
  std::size_t step = 0;
  for_each_minibatch(objective.size(), cfg.server_batch, cfg.server_epochs, rng,
                     [&](std::span<const std::size_t> idx) {
                       const CoefficientVector current(p);
                       const ParamVector w = convex_combine(models, current);
                       const LossGrad lg = objective.loss_and_grad(w, objective.minibatch(idx));
                       if (!std::isfinite(lg.loss)) {
                         throw DivergenceError("coefficient optimization: non-finite proxy loss at step " +
                                               std::to_string(step));
                       }
                       const std::vector<double> gp = coefficient_gradient(models, lg.grad);
                       opt.step(p, gp);
                       p = project_simplex(p).vector();
                       ++step;
                     });
  const CoefficientVector optimized(p);

  // Candidates in tie-break order: initialization, optimized point, vertices.
  std::vector<CoefficientVector> candidates;
  candidates.reserve(n + 2);
  candidates.push_back(init);
  candidates.push_back(optimized);
  for (std::size_t m = 0; m < n; ++m) candidates.push_back(CoefficientVector::one_hot(n, m));

  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  double init_loss = std::numeric_limits<double>::quiet_NaN();
  ParamVector best_w;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    ParamVector w = k >= 2 ? models[k - 2] : convex_combine(models, candidates[k]);
    const double loss = objective.loss(w);
    if (k == 0) init_loss = loss;
    if (loss < best_loss) {
      best_loss = loss;
      best = k;
      best_w = std::move(w);
    }
  }
  if (!std::isfinite(best_loss)) {
    throw DivergenceError("coefficient optimization: no candidate has a finite proxy loss");
  }
  return AggregationResult{std::move(best_w), candidates[best], init_loss, best_loss};
}

void require_proxy(std::size_t n, const char* who) {
  if (n == 0) throw InvalidArgument(std::string(who) + ": empty proxy set");
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kFedAvg: return "fedavg";
    case Strategy::kSmartFl: return "smartfl";
    case Strategy::kSmartFlU: return "smartfl_u";
    case Strategy::kFinetune: return "finetune";
    case Strategy::kAbAvg: return "abavg";
    case Strategy::kKrum: return "krum";
    case Strategy::kMedian: return "median";
    case Strategy::kTrimmedMean: return "trimmed_mean";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  for (Strategy s : {Strategy::kFedAvg, Strategy::kSmartFl, Strategy::kSmartFlU,
                     Strategy::kFinetune, Strategy::kAbAvg, Strategy::kKrum, Strategy::kMedian,
                     Strategy::kTrimmedMean}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown aggregation strategy '" + name + "'");
}

bool needs_labeled_proxy(Strategy s) {
  return s == Strategy::kSmartFl || s == Strategy::kFinetune || s == Strategy::kAbAvg;
}

bool needs_proxy(Strategy s) { return needs_labeled_proxy(s) || s == Strategy::kSmartFlU; }

void AggregationConfig::validate() const {
  if (strategy == Strategy::kSmartFl || strategy == Strategy::kSmartFlU) {
    if (server_epochs == 0) throw ConfigError("aggregation.server_epochs must be positive");
    if (!(server_lr >= 0.0)) throw ConfigError("aggregation.server_lr must be non-negative");
    if (server_batch == 0) throw ConfigError("aggregation.server_batch must be positive");
    if (!(kl_temperature > 0.0)) throw ConfigError("aggregation.kl_temperature must be positive");
  }
  if (strategy == Strategy::kFinetune) {
    if (finetune_epochs == 0) throw ConfigError("aggregation.finetune_epochs must be positive");
    if (!(finetune_lr >= 0.0)) throw ConfigError("aggregation.finetune_lr must be non-negative");
    if (server_batch == 0) throw ConfigError("aggregation.server_batch must be positive");
  }
  if (strategy == Strategy::kTrimmedMean && !(trim_beta >= 0.0 && trim_beta < 0.5)) {
    throw ConfigError("aggregation.trim_beta must lie in [0, 0.5)");
  }
}

AggregationResult fedavg(std::span<const ClientUpdate> clients) {
  require_clients(clients, "fedavg");
  CoefficientVector p = sample_weights(clients);
  const auto models = params_of(clients);
  ParamVector global = convex_combine(models, p);
  return AggregationResult{std::move(global), std::move(p), std::nullopt, std::nullopt};
}

AggregationResult smartfl(std::span<const ClientUpdate> clients, const Dataset& proxy,
                          const ModelSpec& spec, const AggregationConfig& cfg, SeededRng& rng) {
  require_clients(clients, "smartfl");
  require_proxy(proxy.size(), "smartfl");
  const ProxyObjective objective(spec, Batch::labeled(proxy), std::nullopt);
  return optimize_coefficients(clients, objective, cfg, rng);
}

AggregationResult smartfl_u(std::span<const ClientUpdate> clients, const Matrix& proxy_inputs,
                            const ModelSpec& spec, const AggregationConfig& cfg, SeededRng& rng) {
  require_clients(clients, "smartfl_u");
  require_proxy(proxy_inputs.rows, "smartfl_u");
  Batch full;
  full.inputs = proxy_inputs;
  full.targets = ensemble_logits(clients, spec, proxy_inputs, cfg.kl_temperature);
  const ProxyObjective objective(spec, std::move(full), cfg.kl_temperature);
  return optimize_coefficients(clients, objective, cfg, rng);
}

AggregationResult finetune_fullspace(std::span<const ClientUpdate> clients, const Dataset& proxy,
                                     const ModelSpec& spec, const AggregationConfig& cfg,
                                     SeededRng& rng) {
  require_clients(clients, "finetune");
  require_proxy(proxy.size(), "finetune");
  AggregationResult result = fedavg(clients);
  result.coefficients.reset();
  const Batch full = Batch::labeled(proxy);
  result.proxy_loss_before = ce_loss(spec, result.global, full);

  OptimizerConfig opt_cfg;
  opt_cfg.kind = OptimizerKind::kAdam;
  opt_cfg.lr = cfg.finetune_lr;
  Optimizer opt(opt_cfg, result.global.size());
  std::size_t step = 0;
  for_each_minibatch(proxy.size(), cfg.server_batch, cfg.finetune_epochs, rng,
                     [&](std::span<const std::size_t> idx) {
                       const LossGrad lg =
                           ce_loss_and_grad(spec, result.global, Batch::labeled(proxy, idx));
                       if (!std::isfinite(lg.loss)) {
                         throw DivergenceError("finetune: non-finite proxy loss at step " +
                                               std::to_string(step));
                       }
                       opt.step(result.global, lg.grad);
                       ++step;
                     });
  result.proxy_loss_after = ce_loss(spec, result.global, full);
  if (!std::isfinite(*result.proxy_loss_after) || !all_finite(result.global)) {
    throw DivergenceError("finetune: non-finite result");
  }
  return result;
}

AggregationResult abavg(std::span<const ClientUpdate> clients, const Dataset& proxy,
                        const ModelSpec& spec) {
  require_clients(clients, "abavg");
  require_proxy(proxy.size(), "abavg");
  std::vector<double> acc;
  acc.reserve(clients.size());
  for (const auto& c : clients) acc.push_back(evaluate(spec, c.params, proxy).accuracy);
  const bool all_zero = std::all_of(acc.begin(), acc.end(), [](double a) { return a == 0.0; });
  CoefficientVector p =
      all_zero ? CoefficientVector::uniform(clients.size()) : CoefficientVector::from_weights(acc);
  ParamVector global = convex_combine(params_of(clients), p);
  return AggregationResult{std::move(global), std::move(p), std::nullopt, std::nullopt};
}

AggregationResult krum(std::span<const ClientUpdate> clients, std::size_t f) {
  require_clients(clients, "krum");
  const std::size_t n = clients.size();
  if (n < 2 * f + 3) {
    throw InapplicableError("krum: " + std::to_string(n) + " clients cannot tolerate f = " +
                            std::to_string(f) + " (need n >= 2f + 3)");
  }
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = squared_distance(clients[i].params, clients[j].params);
    }
  }
  const std::size_t neighbours = n - f - 2;
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> others;
    others.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(dist[i][j]);
    }
    std::sort(others.begin(), others.end());
    const double score = std::accumulate(others.begin(), others.begin() + neighbours, 0.0);
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return AggregationResult{clients[best].params, CoefficientVector::one_hot(n, best),
                           std::nullopt, std::nullopt};
}

AggregationResult coord_median(std::span<const ClientUpdate> clients) {
  require_clients(clients, "median");
  const std::size_t n = clients.size();
  const std::size_t d = clients.front().params.size();
  ParamVector out(d);
  std::vector<double> column(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t m = 0; m < n; ++m) column[m] = clients[m].params[i];
    std::sort(column.begin(), column.end());
    out[i] = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return AggregationResult{std::move(out), std::nullopt, std::nullopt, std::nullopt};
}

AggregationResult trimmed_mean(std::span<const ClientUpdate> clients, double beta) {
  require_clients(clients, "trimmed_mean");
  if (!(beta >= 0.0 && beta < 0.5)) throw InvalidArgument("trimmed_mean: beta must lie in [0, 0.5)");
  const std::size_t n = clients.size();
  const auto trim = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n) + 1e-9));
  if (2 * trim >= n) {
    throw InvalidArgument("trimmed_mean: trimming " + std::to_string(trim) +
                          " from each side of " + std::to_string(n) + " values leaves none");
  }
  const std::size_t d = clients.front().params.size();
  const double kept = static_cast<double>(n - 2 * trim);
  ParamVector out(d);
  std::vector<double> column(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t m = 0; m < n; ++m) column[m] = clients[m].params[i];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (std::size_t k = trim; k < n - trim; ++k) s += column[k];
    out[i] = s / kept;
  }
  return AggregationResult{std::move(out), std::nullopt, std::nullopt, std::nullopt};
}

AggregationResult aggregate(std::span<const ClientUpdate> clients, const Dataset* proxy,
                            const ModelSpec& spec, const AggregationConfig& cfg, SeededRng& rng) {
  if (needs_proxy(cfg.strategy) && proxy == nullptr) {
    throw InvalidArgument(to_string(cfg.strategy) + ": strategy requires a proxy set");
  }
  switch (cfg.strategy) {
    case Strategy::kFedAvg: return fedavg(clients);
    case Strategy::kSmartFl: return smartfl(clients, *proxy, spec, cfg, rng);
    case Strategy::kSmartFlU: return smartfl_u(clients, proxy->inputs, spec, cfg, rng);
    case Strategy::kFinetune: return finetune_fullspace(clients, *proxy, spec, cfg, rng);
    case Strategy::kAbAvg: return abavg(clients, *proxy, spec);
    case Strategy::kKrum: return krum(clients, cfg.krum_f);
    case Strategy::kMedian: return coord_median(clients);
    case Strategy::kTrimmedMean: return trimmed_mean(clients, cfg.trim_beta);
  }
  throw InvalidArgument("aggregate: unknown strategy");
}

}  // namespace smartfl
