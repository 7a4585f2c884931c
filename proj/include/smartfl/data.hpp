#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "smartfl/dataset.hpp"
#include "smartfl/rng.hpp"

namespace smartfl {

/// Assignment of dataset rows to clients plus the server proxy set.
struct Partition {
  std::vector<std::vector<std::size_t>> client_indices;
  std::vector<std::size_t> proxy_indices;
  double alpha = 0.0;

  /// Throws InvalidArgument if sets overlap, reference rows >= n, or a client is empty.
  void validate(std::size_t n) const;
};

/// Class profile requested for the proxy set. `degree` is the ratio of the
/// largest to the smallest per-class count.
struct ImbalanceSpec {
  double degree = 1.0;
  std::size_t size = 0;
};

struct ProxySplit {
  std::vector<std::size_t> proxy;
  std::vector<std::size_t> remainder;
};

/// Reads an IDX image file (magic 0x00000803) and its label file
/// (0x00000801). Pixels are scaled to [0, 1]. `limit` > 0 keeps only the
/// first `limit` samples.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t limit = 0);

/// Class-conditional isotropic Gaussians with unit variance. Class means are
/// pairwise `separation` apart (scaled basis vectors when input_dim >=
/// num_classes, random directions otherwise). Rows interleave classes.
Dataset generate_synthetic(std::size_t num_classes, std::size_t per_class, std::size_t input_dim,
                           double separation, SeededRng& rng);

/// Non-IID split of `pool` across `clients`: for every class, proportions
/// are drawn from Dirichlet(alpha) and each sample goes to a client drawn
/// from those proportions. Clients that end up empty each take one sample
/// from the currently largest client.
Partition dirichlet_partition(const Dataset& data, std::span<const std::size_t> pool,
                              std::size_t clients, double alpha, SeededRng& rng);
Partition dirichlet_partition(const Dataset& data, std::size_t clients, double alpha,
                              SeededRng& rng);

/// Per-class proxy counts: geometric profile from `degree` (class 0) down
/// to 1 (last class), scaled to `size`, rounded by largest remainder.
std::vector<std::size_t> proxy_class_counts(const ImbalanceSpec& spec, std::size_t num_classes);

/// Draws the proxy set with the requested class profile. The remainder is
/// returned in ascending row order.
ProxySplit sample_proxy(const Dataset& data, const ImbalanceSpec& spec, SeededRng& rng);

/// max / min over per-class counts of the rows in `indices`, counting every class.
double imbalance_ratio(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace smartfl
