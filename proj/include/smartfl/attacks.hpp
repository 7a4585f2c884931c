#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "smartfl/client.hpp"
#include "smartfl/dataset.hpp"
#include "smartfl/rng.hpp"

namespace smartfl {

enum class AttackKind { kNone, kLabelFlip, kOmniscient };

std::string to_string(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  double rate = 0.0;
  /// Sorted ascending; fixed for the whole run.
  std::vector<int> malicious_ids;
  /// Omniscient only: multiple of the mean benign update that is negated.
  double scale = 1.0;

  bool is_malicious(int client_id) const;
};

/// floor(rate * clients) distinct ids drawn with `rng`.
AttackSpec make_attack(AttackKind kind, double rate, std::size_t clients, SeededRng& rng);

/// Label c becomes (c + 1) mod num_classes.
Dataset flip_labels(Dataset shard);

/// Omniscient model poisoning. Every id in `malicious_ids` submits
/// global - scale * mean_delta, where mean_delta is the sample-weighted mean
/// of the benign updates (w_m - global). Reported sample counts are the mean
/// benign count rounded up. Throws InapplicableError when `benign` is empty.
std::vector<ClientUpdate> omniscient_updates(std::span<const ClientUpdate> benign,
                                             std::span<const double> global,
                                             std::span<const int> malicious_ids,
                                             double scale = 1.0);

}  // namespace smartfl
