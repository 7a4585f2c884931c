#include "smartfl/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "smartfl/errors.hpp"

namespace smartfl {

CoefficientVector::CoefficientVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidArgument("CoefficientVector: empty");
  double total = 0.0;
  for (double e : entries_) {
    if (!std::isfinite(e) || e < 0.0) {
      throw InvalidArgument("CoefficientVector: entries must be finite and non-negative");
    }
    total += e;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidArgument("CoefficientVector: entries sum to " + std::to_string(total));
  }
}

CoefficientVector CoefficientVector::uniform(std::size_t n) {
  if (n == 0) throw InvalidArgument("CoefficientVector::uniform: n must be positive");
  return CoefficientVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

CoefficientVector CoefficientVector::one_hot(std::size_t n, std::size_t index) {
  if (index >= n) throw InvalidArgument("CoefficientVector::one_hot: index out of range");
  std::vector<double> e(n, 0.0);
  e[index] = 1.0;
  return CoefficientVector(std::move(e));
}

CoefficientVector CoefficientVector::from_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("from_weights: weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("from_weights: total weight must be positive");
  std::vector<double> e(weights.begin(), weights.end());
  for (auto& x : e) x /= total;
  return CoefficientVector(std::move(e));
}

CoefficientVector project_simplex(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("project_simplex: empty vector");
  if (!all_finite(v)) throw InvalidArgument("project_simplex: non-finite entry");

  double total = 0.0;
  bool nonneg = true;
  for (double x : v) {
    total += x;
    nonneg = nonneg && x >= 0.0;
  }
  if (nonneg && std::abs(total - 1.0) <= 1e-12) {
    return CoefficientVector(std::vector<double>(v.begin(), v.end()));
  }

  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double running = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    running += u[j];
    const double candidate = (running - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return CoefficientVector(std::move(out));
}

ParamVector convex_combine(std::span<const ParamVector> models, const CoefficientVector& p) {
  if (models.empty() || models.size() != p.size()) {
    throw InvalidArgument("convex_combine: " + std::to_string(models.size()) + " models vs " +
                          std::to_string(p.size()) + " coefficients");
  }
  const std::size_t d = models.front().size();
  for (const auto& m : models) {
    if (m.size() != d) throw InvalidArgument("convex_combine: model length mismatch");
  }
  ParamVector out(d, 0.0);
  ParamVector lo = models.front();
  ParamVector hi = models.front();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const double pm = p[m];
    const auto& w = models[m];
    for (std::size_t i = 0; i < d; ++i) {
      out[i] += pm * w[i];
      lo[i] = std::min(lo[i], w[i]);
      hi[i] = std::max(hi[i], w[i]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) out[i] = std::clamp(out[i], lo[i], hi[i]);
  return out;
}

std::vector<double> coefficient_gradient(std::span<const ParamVector> models,
                                         std::span<const double> wgrad) {
  std::vector<double> g(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (models[m].size() != wgrad.size()) {
      throw InvalidArgument("coefficient_gradient: model " + std::to_string(m) +
                            " length differs from gradient length");
    }
    g[m] = dot(wgrad, models[m]);
  }
  return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

ParamVector subtract(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("subtract: length mismatch");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace smartfl
