#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "smartfl/client.hpp"
#include "smartfl/core_math.hpp"
#include "smartfl/dataset.hpp"
#include "smartfl/rng.hpp"

namespace testutil {

inline smartfl::ClientUpdate update(std::vector<double> params, std::size_t count = 1, int id = 0) {
  return smartfl::ClientUpdate{std::move(params), count, id};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::vector<double> random_vector(smartfl::SeededRng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

// Random labeled dataset with Gaussian inputs.
inline smartfl::Dataset random_dataset(smartfl::SeededRng& rng, std::size_t n, std::size_t dim,
                                       std::size_t classes) {
  smartfl::Dataset d;
  d.inputs = smartfl::Matrix(n, dim);
  for (auto& x : d.inputs.data) x = rng.normal();
  d.labels.resize(n);
  for (auto& y : d.labels) y = static_cast<int>(rng.uniform_index(classes));
  d.num_classes = classes;
  return d;
}

// Central differences, written independently of the library's check helpers.
template <typename F>
std::vector<double> numeric_gradient(F&& f, std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

}  // namespace testutil
