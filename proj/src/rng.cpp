#include "smartfl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "smartfl/errors.hpp"

namespace smartfl {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// splitmix64 finalizer; used to derive child stream ids.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

SeededRng SeededRng::split(std::uint64_t child) const {
  return SeededRng(seed_, mix64(stream_ ^ mix64(child)));
}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t SeededRng::uniform_index(std::size_t n) {
  if (n == 0) throw InvalidArgument("uniform_index: n must be positive");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Rejection sampling over the largest multiple of n.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double SeededRng::normal() {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SeededRng::log_gamma_draw(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InvalidArgument("log_gamma_draw: shape must be positive and finite");
  }
  // Marsaglia-Tsang; shapes below 1 use the boost G(a) = G(a+1) * U^(1/a).
  double log_boost = 0.0;
  double a = shape;
  if (a < 1.0) {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    log_boost = std::log(u) / shape;
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform();
    if (u <= 0.0) continue;
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return std::log(d * v) + log_boost;
    }
  }
}

std::vector<double> SeededRng::dirichlet(std::size_t k, double alpha) {
  if (k == 0) throw InvalidArgument("dirichlet: dimension must be positive");
  std::vector<double> logs(k);
  for (auto& l : logs) l = log_gamma_draw(alpha);
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> out(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::exp(logs[i] - top);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

std::vector<std::size_t> SeededRng::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) throw InvalidArgument("sample_without_replacement: k exceeds n");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace smartfl
