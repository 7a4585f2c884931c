#include "smartfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <string>

#include "smartfl/errors.hpp"

namespace smartfl {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw FormatError(path.string() + ": truncated header", offset);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

void Partition::validate(std::size_t n) const {
  std::vector<char> seen(n, 0);
  auto mark = [&](std::size_t idx, const char* owner) {
    if (idx >= n) throw InvalidArgument(std::string("partition: ") + owner + " index out of range");
    if (seen[idx]) throw InvalidArgument(std::string("partition: ") + owner + " index reused");
    seen[idx] = 1;
  };
  for (std::size_t idx : proxy_indices) mark(idx, "proxy");
  for (std::size_t c = 0; c < client_indices.size(); ++c) {
    if (client_indices[c].empty()) {
      throw InvalidArgument("partition: client " + std::to_string(c) + " is empty");
    }
    for (std::size_t idx : client_indices[c]) mark(idx, "client");
  }
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t limit) {
  const auto img = read_bytes(images_path);
  const auto lab = read_bytes(labels_path);

  if (read_be32(img, 0, images_path) != kImageMagic) {
    throw FormatError(images_path.string() + ": bad image magic number", 0);
  }
  if (read_be32(lab, 0, labels_path) != kLabelMagic) {
    throw FormatError(labels_path.string() + ": bad label magic number", 0);
  }
  const std::size_t n_images = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  const std::size_t n_labels = read_be32(lab, 4, labels_path);
  if (n_images != n_labels) {
    throw FormatError("image count " + std::to_string(n_images) + " != label count " +
                          std::to_string(n_labels),
                      4);
  }
  const std::size_t dim = rows * cols;
  if (dim == 0) throw FormatError(images_path.string() + ": zero-sized images", 8);
  constexpr std::size_t kImageHeader = 16;
  constexpr std::size_t kLabelHeader = 8;
  if (img.size() < kImageHeader + n_images * dim) {
    throw FormatError(images_path.string() + ": truncated pixel data", img.size());
  }
  if (lab.size() < kLabelHeader + n_labels) {
    throw FormatError(labels_path.string() + ": truncated label data", lab.size());
  }

  const std::size_t n = limit > 0 ? std::min(limit, n_images) : n_images;
  Dataset out;
  out.inputs = Matrix(n, dim);
  out.labels.resize(n);
  int top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* px = img.data() + kImageHeader + i * dim;
    auto row = out.inputs.row(i);
    for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<double>(px[j]) / 255.0;
    out.labels[i] = lab[kLabelHeader + i];
    top = std::max(top, out.labels[i]);
  }
  out.num_classes = std::max<std::size_t>(2, static_cast<std::size_t>(top) + 1);
  return out;
}

Dataset generate_synthetic(std::size_t num_classes, std::size_t per_class, std::size_t input_dim,
                           double separation, SeededRng& rng) {
  if (num_classes < 2 || per_class == 0 || input_dim == 0 || !(separation >= 0.0)) {
    throw InvalidArgument("generate_synthetic: bad arguments");
  }
  // Means at (separation / sqrt 2) * unit vector; orthogonal unit vectors put
  // every pair exactly `separation` apart.
  const double radius = separation / std::sqrt(2.0);
  Matrix means(num_classes, input_dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto mu = means.row(c);
    if (input_dim >= num_classes) {
      mu[c] = radius;
      continue;
    }
    for (auto& x : mu) x = rng.normal();
    const double norm = std::sqrt(squared_norm(mu));
    for (auto& x : mu) x = norm > 0.0 ? radius * x / norm : 0.0;
  }

  Dataset out;
  out.num_classes = num_classes;
  const std::size_t n = num_classes * per_class;
  out.inputs = Matrix(n, input_dim);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % num_classes;
    out.labels[i] = static_cast<int>(c);
    auto row = out.inputs.row(i);
    auto mu = means.row(c);
    for (std::size_t j = 0; j < input_dim; ++j) row[j] = mu[j] + rng.normal();
  }
  return out;
}

Partition dirichlet_partition(const Dataset& data, std::span<const std::size_t> pool,
                              std::size_t clients, double alpha, SeededRng& rng) {
  if (clients == 0) throw ConfigError("dirichlet_partition: need at least one client");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("dirichlet_partition: alpha must be positive");
  }
  if (pool.size() < clients) {
    throw ConfigError("dirichlet_partition: " + std::to_string(pool.size()) +
                      " samples cannot cover " + std::to_string(clients) + " clients");
  }

  Partition part;
  part.alpha = alpha;
  part.client_indices.assign(clients, {});

  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t idx : pool) {
    if (idx >= data.size()) throw InvalidArgument("dirichlet_partition: index out of range");
    by_class[static_cast<std::size_t>(data.labels[idx])].push_back(idx);
  }

  for (const auto& members : by_class) {
    if (members.empty()) continue;
    const std::vector<double> q = rng.dirichlet(clients, alpha);
    std::vector<double> cdf(clients);
    std::partial_sum(q.begin(), q.end(), cdf.begin());
    for (std::size_t idx : members) {
      const double u = rng.uniform() * cdf.back();
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const std::size_t m = std::min<std::size_t>(clients - 1, it - cdf.begin());
      part.client_indices[m].push_back(idx);
    }
  }

  for (std::size_t m = 0; m < clients; ++m) {
    if (!part.client_indices[m].empty()) continue;
    auto largest = std::max_element(
        part.client_indices.begin(), part.client_indices.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    part.client_indices[m].push_back(largest->back());
    largest->pop_back();
  }
  for (auto& c : part.client_indices) std::sort(c.begin(), c.end());
  return part;
}

Partition dirichlet_partition(const Dataset& data, std::size_t clients, double alpha,
                              SeededRng& rng) {
  std::vector<std::size_t> pool(data.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  return dirichlet_partition(data, pool, clients, alpha, rng);
}

std::vector<std::size_t> proxy_class_counts(const ImbalanceSpec& spec, std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("proxy: need at least 2 classes");
  if (!(spec.degree >= 1.0) || !std::isfinite(spec.degree)) {
    throw ConfigError("proxy: imbalance degree must be >= 1");
  }
  if (spec.size < num_classes) {
    throw ConfigError("proxy: size " + std::to_string(spec.size) + " cannot hold one sample of each of " +
                      std::to_string(num_classes) + " classes");
  }
  std::vector<double> ideal(num_classes);
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    ideal[c] = std::pow(spec.degree, -static_cast<double>(c) / static_cast<double>(num_classes - 1));
    total += ideal[c];
  }
  std::vector<std::size_t> counts(num_classes);
  std::vector<double> remainders(num_classes);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    ideal[c] *= static_cast<double>(spec.size) / total;
    counts[c] = static_cast<std::size_t>(std::floor(ideal[c]));
    remainders[c] = ideal[c] - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(num_classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < spec.size; ++k, ++assigned) ++counts[order[k % num_classes]];
  if (*std::min_element(counts.begin(), counts.end()) == 0) {
    throw ConfigError("proxy: degree " + std::to_string(spec.degree) + " with size " +
                      std::to_string(spec.size) + " leaves a class empty");
  }
  return counts;
}

ProxySplit sample_proxy(const Dataset& data, const ImbalanceSpec& spec, SeededRng& rng) {
  const auto counts = proxy_class_counts(spec, data.num_classes);
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  ProxySplit split;
  std::vector<char> taken(data.size(), 0);
  for (std::size_t c = 0; c < data.num_classes; ++c) {
    if (counts[c] > by_class[c].size()) {
      throw ConfigError("proxy: class " + std::to_string(c) + " needs " +
                        std::to_string(counts[c]) + " samples, dataset has " +
                        std::to_string(by_class[c].size()));
    }
    rng.shuffle(by_class[c]);
    for (std::size_t k = 0; k < counts[c]; ++k) {
      split.proxy.push_back(by_class[c][k]);
      taken[by_class[c][k]] = 1;
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!taken[i]) split.remainder.push_back(i);
  }
  return split;
}

double imbalance_ratio(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<std::size_t> counts(data.num_classes, 0);
  for (std::size_t idx : indices) ++counts[static_cast<std::size_t>(data.labels[idx])];
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*lo == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

}  // namespace smartfl
