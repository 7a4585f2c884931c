#include "smartfl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "smartfl/aggregation.hpp"
#include "smartfl/attacks.hpp"
#include "smartfl/client.hpp"
#include "smartfl/errors.hpp"

namespace smartfl {

namespace {

std::pair<Dataset, Dataset> load_data(const ExperimentConfig& cfg) {
  if (cfg.data.source == DataSourceKind::kIdx) {
    const auto& i = cfg.data.idx;
    Dataset train = load_idx(i.train_images, i.train_labels, i.train_limit);
    Dataset test = load_idx(i.test_images, i.test_labels, i.test_limit);
    const std::size_t k = std::max(train.num_classes, test.num_classes);
    train.num_classes = test.num_classes = k;
    return {std::move(train), std::move(test)};
  }
  const auto& s = cfg.data.synthetic;
  // One draw for train and test so they share class means; rows interleave
  // classes, so the first num_classes * train_per_class rows are balanced.
  SeededRng rng(cfg.seed, stream_id(StreamTag::kData));
  Dataset all = generate_synthetic(s.num_classes, s.train_per_class + s.test_per_class,
                                   s.input_dim, s.separation, rng);
  const std::size_t n_train = s.num_classes * s.train_per_class;
  std::vector<std::size_t> train_idx(n_train);
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  std::vector<std::size_t> test_idx(all.size() - n_train);
  std::iota(test_idx.begin(), test_idx.end(), n_train);
  return {all.subset(train_idx), all.subset(test_idx)};
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions from
// workers are rethrown (the first by index).
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(threads, n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void evaluate_into(RoundRecord& rec, const Federation& fed, const ParamVector& global) {
  const EvalReport test = evaluate(fed.model, global, fed.test);
  rec.test_acc = test.accuracy;
  rec.test_loss = test.mean_loss;
  if (fed.proxy) rec.proxy_acc = evaluate(fed.model, global, *fed.proxy).accuracy;
}

template <typename E>
[[noreturn]] void rethrow_with_round(const E& e, std::size_t round) {
  throw E("round " + std::to_string(round) + ": " + e.what());
}

}  // namespace

Federation build_federation(const ExperimentConfig& cfg) {
  cfg.validate();
  Federation fed;
  auto [train, test] = load_data(cfg);
  fed.train = std::move(train);
  fed.test = std::move(test);
  fed.train.validate();
  fed.test.validate();
  if (fed.test.size() == 0) throw ConfigError("data: empty test set");

  fed.model = cfg.model;
  fed.model.input_dim = fed.train.input_dim();
  fed.model.num_classes = fed.train.num_classes;
  fed.model.validate();

  std::vector<std::size_t> pool(fed.train.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (cfg.proxy.imbalance.size > 0) {
    SeededRng rng(cfg.seed, stream_id(StreamTag::kProxy));
    ProxySplit split = sample_proxy(fed.train, cfg.proxy.imbalance, rng);
    fed.proxy = fed.train.subset(split.proxy);
    pool = std::move(split.remainder);
    fed.partition.proxy_indices = std::move(split.proxy);
  }
  {
    SeededRng rng(cfg.seed, stream_id(StreamTag::kPartition));
    Partition part = dirichlet_partition(fed.train, pool, cfg.clients, cfg.alpha, rng);
    fed.partition.client_indices = std::move(part.client_indices);
    fed.partition.alpha = part.alpha;
  }
  {
    SeededRng rng(cfg.seed, stream_id(StreamTag::kAttack));
    fed.attack = make_attack(cfg.attack.kind, cfg.attack.rate, cfg.clients, rng);
    fed.attack.scale = cfg.attack.scale;
  }
  fed.shards.reserve(cfg.clients);
  for (std::size_t m = 0; m < cfg.clients; ++m) {
    Dataset shard = fed.train.subset(fed.partition.client_indices[m]);
    if (fed.attack.kind == AttackKind::kLabelFlip && fed.attack.is_malicious(static_cast<int>(m))) {
      shard = flip_labels(std::move(shard));
    }
    fed.shards.push_back(std::move(shard));
  }
  return fed;
}

ParamVector initial_model(const ExperimentConfig& cfg, const ModelSpec& model) {
  SeededRng rng(cfg.seed, stream_id(StreamTag::kInit));
  return init_params(model, rng);
}

std::vector<int> sample_clients(const ExperimentConfig& cfg, std::size_t round) {
  SeededRng rng(cfg.seed, stream_id(StreamTag::kSampling, round));
  std::vector<int> ids;
  for (std::size_t id : rng.sample_without_replacement(cfg.clients, cfg.clients_per_round())) {
    ids.push_back(static_cast<int>(id));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

RunResult run(const ExperimentConfig& cfg, const RunOptions& options) {
  return run(cfg, build_federation(cfg), options);
}

RunResult run(const ExperimentConfig& cfg, const Federation& fed, const RunOptions& options) {
  using Clock = std::chrono::steady_clock;
  RunResult result;
  ParamVector global = initial_model(cfg, fed.model);
  const bool omniscient = fed.attack.kind == AttackKind::kOmniscient;

  {
    const auto t0 = Clock::now();
    RoundRecord rec;
    evaluate_into(rec, fed, global);
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    result.records.push_back(std::move(rec));
  }

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    const auto t0 = Clock::now();
    RoundRecord rec;
    rec.round = round;
    rec.sampled_ids = sample_clients(cfg, round);
    for (int id : rec.sampled_ids) rec.malicious.push_back(fed.attack.is_malicious(id));

    std::vector<int> trained;
    std::vector<int> fabricated;
    for (int id : rec.sampled_ids) {
      (omniscient && fed.attack.is_malicious(id) ? fabricated : trained).push_back(id);
    }
    if (options.reverse_client_order) std::reverse(trained.begin(), trained.end());

    try {
      std::vector<ClientUpdate> benign(trained.size());
      parallel_for(trained.size(), cfg.threads, [&](std::size_t i) {
        const int id = trained[i];
        SeededRng rng(cfg.seed, stream_id(StreamTag::kLocal, round, static_cast<std::uint64_t>(id)));
        benign[i] = local_update(fed.model, global, fed.shards[static_cast<std::size_t>(id)],
                                 cfg.local, rng, id);
      });

      // Barrier: every benign update exists before poisoned ones are built.
      std::vector<ClientUpdate> updates = std::move(benign);
      if (!fabricated.empty()) {
        if (updates.empty()) {
          rec.skipped = true;
          rec.warning = "no benign clients sampled; omniscient attack inapplicable, round skipped";
        } else {
          auto poisoned = omniscient_updates(updates, global, fabricated, fed.attack.scale);
          updates.insert(updates.end(), std::make_move_iterator(poisoned.begin()),
                         std::make_move_iterator(poisoned.end()));
        }
      }

      if (!rec.skipped) {
        std::sort(updates.begin(), updates.end(),
                  [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });
        SeededRng server_rng(cfg.seed, stream_id(StreamTag::kServer, round));
        const Dataset* proxy = fed.proxy ? &*fed.proxy : nullptr;
        AggregationResult agg = aggregate(updates, proxy, fed.model, cfg.aggregation, server_rng);
        if (!all_finite(agg.global)) throw DivergenceError("aggregated model is not finite");
        global = std::move(agg.global);
        if (agg.coefficients) rec.coefficients = agg.coefficients->vector();
        rec.proxy_loss_before = agg.proxy_loss_before;
        rec.proxy_loss_after = agg.proxy_loss_after;
      }
    } catch (const DivergenceError& e) {
      rethrow_with_round(e, round);
    } catch (const InapplicableError& e) {
      rethrow_with_round(e, round);
    } catch (const InvalidArgument& e) {
      rethrow_with_round(e, round);
    }

    if (round % cfg.eval_every == 0 || round == cfg.rounds) evaluate_into(rec, fed, global);
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    result.records.push_back(std::move(rec));
  }
  result.final_global = std::move(global);
  return result;
}

double best_accuracy(const std::vector<RoundRecord>& records) {
  double best = 0.0;
  for (const auto& r : records) {
    if (r.test_acc) best = std::max(best, *r.test_acc);
  }
  return best;
}

double final_accuracy(const std::vector<RoundRecord>& records) {
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->test_acc) return *it->test_acc;
  }
  return 0.0;
}

std::optional<double> mean_malicious_coefficient(const std::vector<RoundRecord>& records,
                                                 std::size_t first, std::size_t last) {
  double total = 0.0;
  std::size_t rounds = 0;
  for (const auto& r : records) {
    if (r.round < first || r.round > last || !r.coefficients) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < r.sampled_ids.size(); ++i) {
      if (r.malicious[i]) {
        sum += (*r.coefficients)[i];
        ++count;
      }
    }
    if (count == 0) continue;
    total += sum / static_cast<double>(count);
    ++rounds;
  }
  if (rounds == 0) return std::nullopt;
  return total / static_cast<double>(rounds);
}

}  // namespace smartfl
