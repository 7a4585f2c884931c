#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "smartfl/aggregation.hpp"
#include "smartfl/attacks.hpp"
#include "smartfl/client.hpp"
#include "smartfl/data.hpp"
#include "smartfl/models.hpp"

namespace smartfl {

enum class DataSourceKind { kSynthetic, kIdx };
enum class MetricsFormat { kCsv, kJson };

struct SyntheticDataConfig {
  std::size_t num_classes = 10;
  std::size_t input_dim = 20;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 100;
  double separation = 3.0;
};

struct IdxDataConfig {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
};

struct DataConfig {
  DataSourceKind source = DataSourceKind::kSynthetic;
  SyntheticDataConfig synthetic;
  IdxDataConfig idx;
};

struct ProxyConfig {
  ImbalanceSpec imbalance{1.0, 0};
  bool labeled = true;
};

struct AttackConfig {
  AttackKind kind = AttackKind::kNone;
  double rate = 0.0;
  /// Omniscient only: 1 negates the mean benign update.
  double scale = 1.0;
};

/// Everything needed to reproduce one run. input_dim and num_classes of the
/// model come from the data source.
struct ExperimentConfig {
  ModelSpec model;
  DataConfig data;
  std::size_t clients = 20;
  double participation = 0.4;
  double alpha = 0.05;
  std::size_t rounds = 60;
  std::size_t eval_every = 1;
  ProxyConfig proxy;
  LocalConfig local;
  AggregationConfig aggregation;
  AttackConfig attack;
  std::uint64_t seed = 1;
  std::string output = "metrics.csv";
  MetricsFormat format = MetricsFormat::kCsv;
  std::size_t threads = 1;

  /// Number of clients sampled each round: ceil(participation * clients).
  std::size_t clients_per_round() const;
  /// Cross-field checks. Throws ConfigError.
  void validate() const;
};

/// Builds a config from a JSON document. Unknown keys and wrong types are
/// reported with their dotted path. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Parses JSON text; syntax errors are reported with line and column.
nlohmann::json parse_config_text(const std::string& text, const std::string& origin = "config");
nlohmann::json read_config_file(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets `dotted.key` in `doc`. The value is parsed as JSON when possible
/// (numbers, booleans) and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& dotted_key, const std::string& value);

}  // namespace smartfl
