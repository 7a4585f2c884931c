#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smartfl {

/// Flat model parameters; the unit exchanged between clients and server.
using ParamVector = std::vector<double>;

/// A point on the probability simplex over the clients sampled in a round.
/// Construction validates: entries >= 0 and sum within 1e-9 of one.
class CoefficientVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit CoefficientVector(std::vector<double> entries);

  static CoefficientVector uniform(std::size_t n);
  static CoefficientVector one_hot(std::size_t n, std::size_t index);
  /// Normalizes non-negative weights with positive total.
  static CoefficientVector from_weights(std::span<const double> weights);

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> values() const noexcept { return entries_; }
  const std::vector<double>& vector() const noexcept { return entries_; }

  friend bool operator==(const CoefficientVector&, const CoefficientVector&) = default;

 private:
  std::vector<double> entries_;
};

/// Euclidean projection onto the unit simplex (sort, running-sum threshold,
/// clamp). Inputs already on the simplex (non-negative, sum within 1e-12 of
/// one) are returned unchanged, which makes the projection exactly idempotent.
CoefficientVector project_simplex(std::span<const double> v);

/// sum_m p[m] * models[m], clamped coordinate-wise into the inputs' range so
/// the result is inside the convex hull despite rounding.
ParamVector convex_combine(std::span<const ParamVector> models, const CoefficientVector& p);

/// Chain rule through w(p) = sum_m p_m w_m: g_m = <wgrad, models[m]>.
std::vector<double> coefficient_gradient(std::span<const ParamVector> models,
                                         std::span<const double> wgrad);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
bool all_finite(std::span<const double> v);
/// a - b
ParamVector subtract(std::span<const double> a, std::span<const double> b);

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace smartfl
