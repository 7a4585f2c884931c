#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "smartfl/core_math.hpp"
#include "smartfl/errors.hpp"
#include "smartfl/rng.hpp"

using namespace smartfl;

namespace {

// Minimizes ||x - v||^2 over the grid {(t, 1 - t) : t = k * step}.
std::vector<double> grid_projection_2d(const std::vector<double>& v, double step) {
  const auto n = static_cast<long>(std::llround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> arg;
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    const double d = (t - v[0]) * (t - v[0]) + (1 - t - v[1]) * (1 - t - v[1]);
    if (d < best) {
      best = d;
      arg = {t, 1 - t};
    }
  }
  return arg;
}

std::vector<double> grid_projection_3d(const std::vector<double>& v, double step) {
  const auto n = static_cast<long>(std::llround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> arg;
  for (long i = 0; i <= n; ++i) {
    for (long j = 0; i + j <= n; ++j) {
      const double a = static_cast<double>(i) / n, b = static_cast<double>(j) / n, c = 1 - a - b;
      const double d = (a - v[0]) * (a - v[0]) + (b - v[1]) * (b - v[1]) + (c - v[2]) * (c - v[2]);
      if (d < best) {
        best = d;
        arg = {a, b, c};
      }
    }
  }
  return arg;
}

}  // namespace

TEST_CASE("CoefficientVector validates the simplex") {
  CHECK_NOTHROW(CoefficientVector({0.25, 0.75}));
  CHECK_THROWS_AS(CoefficientVector({0.5, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(CoefficientVector({1.1, -0.1}), InvalidArgument);
  CHECK_THROWS_AS(CoefficientVector({}), InvalidArgument);

  auto u = CoefficientVector::uniform(4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == 0.25);
  auto h = CoefficientVector::one_hot(3, 2);
  CHECK(h.vector() == std::vector<double>{0, 0, 1});
  std::vector<double> w{3, 1};
  CHECK(CoefficientVector::from_weights(w).vector() == std::vector<double>{0.75, 0.25});
}

TEST_CASE("project_simplex fixed points") {
  CHECK(project_simplex(std::vector<double>{0.5, 0.5}).vector() == std::vector<double>{0.5, 0.5});
  CHECK(project_simplex(std::vector<double>{1.0}).vector() == std::vector<double>{1.0});
  CHECK(project_simplex(std::vector<double>{7.0}).vector() == std::vector<double>{1.0});
}

TEST_CASE("project_simplex matches a 1e-4 grid on the 2-simplex") {
  std::vector<double> v{1.2, -0.2};
  auto oracle = grid_projection_2d(v, 1e-4);
  auto p = project_simplex(v);
  CHECK(oracle == std::vector<double>{1.0, 0.0});
  CHECK(std::abs(p[0] - oracle[0]) <= 1e-4);
  CHECK(std::abs(p[1] - oracle[1]) <= 1e-4);
}

TEST_CASE("project_simplex agrees with grid search on random inputs") {
  SeededRng rng(11, 0);
  for (int trial = 0; trial < 40; ++trial) {
    auto v = testutil::random_vector(rng, 2, 1.5);
    auto oracle = grid_projection_2d(v, 1e-4);
    CHECK(testutil::max_abs_diff(project_simplex(v).vector(), oracle) <= 2e-4);
  }
  for (int trial = 0; trial < 10; ++trial) {
    auto v = testutil::random_vector(rng, 3, 1.0);
    auto oracle = grid_projection_3d(v, 2e-3);
    CHECK(testutil::max_abs_diff(project_simplex(v).vector(), oracle) <= 4e-3);
  }
}

TEST_CASE("project_simplex is idempotent and lands on the simplex") {
  SeededRng rng(12, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    auto v = testutil::random_vector(rng, n, 3.0);
    auto p = project_simplex(v);
    double sum = std::accumulate(p.values().begin(), p.values().end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::all_of(p.values().begin(), p.values().end(), [](double x) { return x >= 0; }));
    CHECK(project_simplex(p.values()) == p);
  }
}

TEST_CASE("project_simplex rejects bad input") {
  CHECK_THROWS_AS(project_simplex(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(project_simplex(std::vector<double>{0.5, std::nan("")}), InvalidArgument);
  CHECK_THROWS_AS(project_simplex(std::vector<double>{std::numeric_limits<double>::infinity()}),
                  InvalidArgument);
}

TEST_CASE("convex_combine") {
  std::vector<ParamVector> same{{1.5, -2.0}, {1.5, -2.0}};
  CHECK(convex_combine(same, CoefficientVector({0.3, 0.7})) == ParamVector{1.5, -2.0});

  std::vector<ParamVector> basis{{1, 0}, {0, 1}};
  CHECK(convex_combine(basis, CoefficientVector({0.25, 0.75})) == ParamVector{0.25, 0.75});

  SeededRng rng(3, 0);
  std::vector<ParamVector> models;
  for (int i = 0; i < 3; ++i) models.push_back(testutil::random_vector(rng, 5));
  CHECK(convex_combine(models, CoefficientVector::one_hot(3, 2)) == models[2]);

  CHECK_THROWS_AS(convex_combine(models, CoefficientVector::uniform(2)), InvalidArgument);
  std::vector<ParamVector> ragged{{1, 2}, {1}};
  CHECK_THROWS_AS(convex_combine(ragged, CoefficientVector::uniform(2)), InvalidArgument);
}

TEST_CASE("convex_combine stays inside the coordinate envelope") {
  SeededRng rng(4, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ParamVector> models;
    for (int i = 0; i < 4; ++i) models.push_back(testutil::random_vector(rng, 6, 10.0));
    auto p = project_simplex(testutil::random_vector(rng, 4));
    auto w = convex_combine(models, p);
    for (std::size_t j = 0; j < 6; ++j) {
      double lo = models[0][j], hi = models[0][j];
      for (auto& m : models) lo = std::min(lo, m[j]), hi = std::max(hi, m[j]);
      CHECK(w[j] >= lo);
      CHECK(w[j] <= hi);
    }
  }
}

TEST_CASE("coefficient_gradient") {
  std::vector<ParamVector> basis{{1, 0}, {0, 1}};
  CHECK(coefficient_gradient(basis, std::vector<double>{2, 3}) == std::vector<double>{2, 3});
  CHECK(coefficient_gradient(basis, std::vector<double>{0, 0}) == std::vector<double>{0, 0});
  CHECK_THROWS_AS(coefficient_gradient(basis, std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST_CASE("coefficient_gradient is the chain rule of a quadratic") {
  // f(p) = 0.5 ||w(p) - t||^2 with w(p) = sum p_m w_m, so df/dw = w - t.
  SeededRng rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ParamVector> models;
    for (int i = 0; i < 3; ++i) models.push_back(testutil::random_vector(rng, 4));
    auto target = testutil::random_vector(rng, 4);
    auto f = [&](const std::vector<double>& p) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        double w = 0.0;
        for (std::size_t m = 0; m < 3; ++m) w += p[m] * models[m][j];
        s += 0.5 * (w - target[j]) * (w - target[j]);
      }
      return s;
    };
    std::vector<double> p{0.2, 0.5, 0.3};
    std::vector<double> wgrad(4);
    for (std::size_t j = 0; j < 4; ++j) {
      double w = 0.0;
      for (std::size_t m = 0; m < 3; ++m) w += p[m] * models[m][j];
      wgrad[j] = w - target[j];
    }
    CHECK(testutil::rel_err(coefficient_gradient(models, wgrad), testutil::numeric_gradient(f, p)) <
          1e-7);
  }
}

TEST_CASE("vector helpers") {
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(dot(a, b) == 32.0);
  CHECK(squared_norm(a) == 14.0);
  CHECK(squared_distance(a, b) == 27.0);
  CHECK(subtract(b, a) == ParamVector{3, 3, 3});
  CHECK(all_finite(a));
  CHECK_FALSE(all_finite(std::vector<double>{1, std::nan("")}));
  CHECK_THROWS_AS(dot(a, std::vector<double>{1}), InvalidArgument);
}

TEST_CASE("SeededRng determinism and streams") {
  SeededRng a(42, 7), b(42, 7), c(42, 8);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 16; ++i) xa.push_back(a.next_u64()), xb.push_back(b.next_u64()),
                              xc.push_back(c.next_u64());
  CHECK(xa == xb);
  CHECK(xa != xc);

  SeededRng parent(1, 2);
  auto before = parent.split(3).next_u64();
  parent.next_u64();
  CHECK(parent.split(3).next_u64() == before);

  CHECK(stream_id(StreamTag::kLocal, 1, 2) != stream_id(StreamTag::kLocal, 2, 1));
}

TEST_CASE("SeededRng distributions") {
  SeededRng rng(9, 0);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);

  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(rng.uniform_index(7) < 7);
  }

  auto d = rng.dirichlet(5, 0.01);
  CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::all_of(d.begin(), d.end(), [](double x) { return x >= 0.0 && std::isfinite(x); }));

  auto s = rng.sample_without_replacement(10, 10);
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(s[i] == i);
}
