#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "smartfl/config.hpp"
#include "smartfl/core_math.hpp"
#include "smartfl/dataset.hpp"
#include "smartfl/data.hpp"

namespace smartfl {

/// Metrics for one communication round. Round 0 describes the initial model
/// and has no sampled clients. `coefficients`, when present, align with
/// `sampled_ids`.
struct RoundRecord {
  std::size_t round = 0;
  std::vector<int> sampled_ids;
  std::optional<std::vector<double>> coefficients;
  std::vector<bool> malicious;
  std::optional<double> test_acc;
  std::optional<double> test_loss;
  std::optional<double> proxy_acc;
  std::optional<double> proxy_loss_before;
  std::optional<double> proxy_loss_after;
  double wall_ms = 0.0;
  bool skipped = false;
  std::string warning;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// Materialized data for a run: test set, proxy set and per-client shards
/// (label-flipped for malicious clients under that attack).
struct Federation {
  ModelSpec model;
  Dataset train;
  Dataset test;
  Partition partition;
  std::optional<Dataset> proxy;
  std::vector<Dataset> shards;
  AttackSpec attack;
};

struct RunOptions {
  /// Train sampled clients in descending id order. Results must not change.
  bool reverse_client_order = false;
};

struct RunResult {
  std::vector<RoundRecord> records;
  ParamVector final_global;
};

/// Loads/generates data, splits proxy and clients, and draws the malicious set.
Federation build_federation(const ExperimentConfig& cfg);

/// The initial global model shared by every strategy for a given seed.
ParamVector initial_model(const ExperimentConfig& cfg, const ModelSpec& model);

/// Clients sampled in `round` (>= 1), ascending.
std::vector<int> sample_clients(const ExperimentConfig& cfg, std::size_t round);

/// The full federated loop. Bit-reproducible from the config (including seed).
RunResult run(const ExperimentConfig& cfg, const RunOptions& options = {});
RunResult run(const ExperimentConfig& cfg, const Federation& fed, const RunOptions& options = {});

/// Largest test accuracy over evaluated rounds (round 0 included).
double best_accuracy(const std::vector<RoundRecord>& records);
/// Test accuracy of the last evaluated round.
double final_accuracy(const std::vector<RoundRecord>& records);
/// Mean, over rounds in [first, last] that carry coefficients and sample a
/// malicious client, of the average coefficient given to malicious clients.
std::optional<double> mean_malicious_coefficient(const std::vector<RoundRecord>& records,
                                                 std::size_t first, std::size_t last);

}  // namespace smartfl
