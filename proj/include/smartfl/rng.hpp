#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace smartfl {

/// Deterministic random source identified by a (seed, stream) pair.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq, both of which
/// the standard specifies bit-exactly. All distributions are implemented here
/// rather than taken from <random>, whose distribution algorithms are
/// implementation-defined, so draw sequences match across toolchains.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent generator for a sub-stream; does not advance this one.
  SeededRng split(std::uint64_t child) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer on [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// log of a Gamma(shape, 1) draw. Working in log space keeps tiny shapes
  /// (Dirichlet alpha around 0.01) from underflowing to zero.
  double log_gamma_draw(double shape);
  /// Dirichlet(alpha, ..., alpha) of dimension k.
  std::vector<double> dirichlet(std::size_t k, double alpha);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  /// k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Stream identifiers for the independent random consumers of a run.
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kData = 2,
  kPartition = 3,
  kProxy = 4,
  kAttack = 5,
  kSampling = 6,
  kLocal = 7,
  kServer = 8,
  kTestData = 9,
};

/// Packs (tag, round, client) into a stream id: 8 bits tag, 28 bits round,
/// 28 bits client.
constexpr std::uint64_t stream_id(StreamTag tag, std::uint64_t round = 0,
                                  std::uint64_t client = 0) {
  return (static_cast<std::uint64_t>(tag) << 56) | ((round & 0xFFFFFFFull) << 28) |
         (client & 0xFFFFFFFull);
}

}  // namespace smartfl
