#include "smartfl/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "smartfl/errors.hpp"

namespace smartfl {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kLabelFlip: return "label_flip";
    case AttackKind::kOmniscient: return "omniscient";
  }
  return "unknown";
}

bool AttackSpec::is_malicious(int client_id) const {
  return std::binary_search(malicious_ids.begin(), malicious_ids.end(), client_id);
}

AttackSpec make_attack(AttackKind kind, double rate, std::size_t clients, SeededRng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("attack: rate must lie in [0, 1)");
  AttackSpec spec{kind, rate, {}};
  if (kind == AttackKind::kNone) return spec;
  // The epsilon absorbs representation error such as 0.7 * 10 = 6.999...
  const auto count =
      static_cast<std::size_t>(std::floor(rate * static_cast<double>(clients) + 1e-9));
  for (std::size_t id : rng.sample_without_replacement(clients, count)) {
    spec.malicious_ids.push_back(static_cast<int>(id));
  }
  std::sort(spec.malicious_ids.begin(), spec.malicious_ids.end());
  return spec;
}

Dataset flip_labels(Dataset shard) {
  const int k = static_cast<int>(shard.num_classes);
  for (int& y : shard.labels) y = (y + 1) % k;
  return shard;
}

std::vector<ClientUpdate> omniscient_updates(std::span<const ClientUpdate> benign,
                                             std::span<const double> global,
                                             std::span<const int> malicious_ids,
                                             double scale) {
  if (!(std::isfinite(scale) && scale >= 0.0)) {
    throw InvalidArgument("omniscient attack: scale must be finite and non-negative");
  }
  if (benign.empty()) {
    throw InapplicableError("omniscient attack: no benign clients in this round");
  }
  std::vector<double> mean_delta(global.size(), 0.0);
  double total = 0.0;
  for (const auto& b : benign) {
    if (b.params.size() != global.size()) {
      throw InvalidArgument("omniscient attack: update length mismatch");
    }
    const double w = static_cast<double>(b.sample_count);
    for (std::size_t i = 0; i < global.size(); ++i) {
      mean_delta[i] += w * (b.params[i] - global[i]);
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("omniscient attack: benign sample counts are zero");
  for (auto& x : mean_delta) x /= total;

  const std::size_t reported =
      (static_cast<std::size_t>(total) + benign.size() - 1) / benign.size();
  ParamVector poisoned(global.size());
  for (std::size_t i = 0; i < global.size(); ++i) poisoned[i] = global[i] - scale * mean_delta[i];

  std::vector<ClientUpdate> out;
  out.reserve(malicious_ids.size());
  for (int id : malicious_ids) out.push_back(ClientUpdate{poisoned, reported, id});
  return out;
}

}  // namespace smartfl
