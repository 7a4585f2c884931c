#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "smartfl/errors.hpp"
#include "smartfl/models.hpp"

using namespace smartfl;

namespace {

ModelSpec logistic(std::size_t in, std::size_t k) {
  return ModelSpec{ModelKind::kLogistic, in, 0, k, Activation::kRelu};
}
ModelSpec mlp(std::size_t in, std::size_t hidden, std::size_t k, Activation act = Activation::kRelu) {
  return ModelSpec{ModelKind::kMlp, in, hidden, k, act};
}

Batch one_sample(std::vector<double> x, int y = 0) {
  Batch b;
  b.inputs = Matrix(1, x.size());
  b.inputs.data = std::move(x);
  b.labels = {y};
  return b;
}

}  // namespace

TEST_CASE("parameter counts") {
  SeededRng rng(1, 0);
  CHECK(init_params(logistic(2, 2), rng).size() == 6);
  CHECK(init_params(mlp(3, 4, 2), rng).size() == 26);
  CHECK(mlp(3, 4, 2).param_count() == 26);
}

TEST_CASE("init_params is seeded and bounded") {
  SeededRng a(7, 1), b(7, 1);
  auto spec = mlp(5, 3, 4);
  auto pa = init_params(spec, a);
  CHECK(pa == init_params(spec, b));
  // W1 entries bounded by 1/sqrt(5); b1 zero.
  for (std::size_t i = 0; i < 15; ++i) CHECK(std::abs(pa[i]) <= 1.0 / std::sqrt(5.0));
  for (std::size_t i = 15; i < 18; ++i) CHECK(pa[i] == 0.0);
}

TEST_CASE("ModelSpec validation") {
  CHECK_THROWS_AS(logistic(0, 2).validate(), InvalidArgument);
  CHECK_THROWS_AS(logistic(3, 1).validate(), InvalidArgument);
  CHECK_THROWS_AS(mlp(3, 0, 2).validate(), InvalidArgument);
  auto bad = logistic(3, 2);
  bad.hidden_dim = 4;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("forward") {
  auto spec = logistic(3, 4);
  ParamVector zero(spec.param_count(), 0.0);
  Matrix x(2, 3, 1.7);
  auto z = forward(spec, zero, x);
  CHECK(std::all_of(z.data.begin(), z.data.end(), [](double v) { return v == 0.0; }));

  // W = [[1, 0], [0, 2]], b = [0.5, -1], x = [3, 4] -> [3.5, 7].
  auto lin = logistic(2, 2);
  ParamVector p{1, 0, 0, 2, 0.5, -1};
  auto out = forward(lin, p, one_sample({3, 4}));
  CHECK(out(0, 0) == 3.5);
  CHECK(out(0, 1) == 7.0);

  // W1 = [[1], [-1]], b1 = 0, W2 = [[1, 1], [2, 0]], b2 = [0, 1], x = [2]:
  // h = relu([2, -2]) = [2, 0], logits = [2, 5].
  auto net = mlp(1, 2, 2);
  ParamVector q{1, -1, 0, 0, 1, 1, 2, 0, 0, 1};
  auto o2 = forward(net, q, one_sample({2}));
  CHECK(o2(0, 0) == 2.0);
  CHECK(o2(0, 1) == 5.0);
  // tanh: h = [tanh 2, -tanh 2], logits = [0, 2 tanh 2 + 1].
  auto o3 = forward(mlp(1, 2, 2, Activation::kTanh), q, one_sample({2}));
  CHECK(o3(0, 0) == doctest::Approx(0.0));
  CHECK(o3(0, 1) == doctest::Approx(2 * std::tanh(2.0) + 1));

  SeededRng rng(2, 0);
  auto params = init_params(mlp(3, 5, 3), rng);
  Matrix copies(4, 3);
  for (std::size_t i = 0; i < 4; ++i) copies(i, 0) = 0.3, copies(i, 1) = -1.0, copies(i, 2) = 2.0;
  auto rows = forward(mlp(3, 5, 3), params, copies);
  for (std::size_t i = 1; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(rows(i, j) == rows(0, j));
  }

  CHECK_THROWS_AS(forward(spec, ParamVector(5), x), InvalidArgument);
  CHECK_THROWS_AS(forward(spec, zero, Matrix(1, 2)), InvalidArgument);
}

TEST_CASE("softmax rows") {
  SeededRng rng(3, 0);
  Matrix z(20, 7);
  for (auto& v : z.data) v = 30.0 * rng.normal();
  for (double t : {0.5, 1.0, 4.0}) {
    auto s = softmax_rows(z, t);
    for (std::size_t i = 0; i < z.rows; ++i) {
      double sum = 0.0;
      for (double v : s.row(i)) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("cross-entropy values") {
  auto spec = logistic(3, 2);
  ParamVector zero(spec.param_count(), 0.0);
  Batch b = one_sample({1, 2, 3}, 1);
  auto lg = ce_loss_and_grad(spec, zero, b);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  // Duplicating every sample keeps the mean loss and gradient.
  SeededRng rng(4, 0);
  auto data = testutil::random_dataset(rng, 6, 3, 2);
  auto params = init_params(spec, rng);
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5}, twice{0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5};
  auto once = ce_loss_and_grad(spec, params, Batch::labeled(data, idx));
  auto dup = ce_loss_and_grad(spec, params, Batch::labeled(data, twice));
  CHECK(dup.loss == doctest::Approx(once.loss).epsilon(1e-14));
  CHECK(testutil::max_abs_diff(dup.grad, once.grad) < 1e-14);

  // Order of samples does not matter.
  std::vector<std::size_t> rev{5, 4, 3, 2, 1, 0};
  auto back = ce_loss_and_grad(spec, params, Batch::labeled(data, rev));
  CHECK(back.loss == doctest::Approx(once.loss).epsilon(1e-14));

  Batch unlabeled;
  unlabeled.inputs = Matrix(1, 3);
  CHECK_THROWS_AS(ce_loss_and_grad(spec, zero, unlabeled), InvalidArgument);
}

TEST_CASE("KL values") {
  auto spec = logistic(4, 3);
  SeededRng rng(5, 0);
  auto data = testutil::random_dataset(rng, 5, 4, 3);
  auto params = init_params(spec, rng);
  for (auto& v : params) v *= 3.0;

  for (double t : {1.0, 2.5}) {
    Batch b = Batch::labeled(data);
    b.targets = softmax_rows(forward(spec, params, b.inputs), t);
    auto lg = kl_loss_and_grad(spec, params, b, t);
    CHECK(std::abs(lg.loss) < 1e-10);
    for (double g : lg.grad) CHECK(std::abs(g) < 1e-10);
  }

  Batch u = Batch::labeled(data);
  u.targets = Matrix(5, 3, 1.0 / 3.0);
  CHECK(kl_loss(spec, ParamVector(spec.param_count(), 0.0), u) == doctest::Approx(0.0));

  Batch bad = Batch::labeled(data);
  bad.targets = Matrix(5, 3, 0.5);
  CHECK_THROWS_AS(kl_loss_and_grad(spec, params, bad), InvalidArgument);
  Batch none = Batch::labeled(data);
  CHECK_THROWS_AS(kl_loss_and_grad(spec, params, none), InvalidArgument);
}

TEST_CASE("analytic gradients match central differences") {
  SeededRng rng(6, 0);
  int instances = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t in = 1 + rng.uniform_index(5), k = 2 + rng.uniform_index(4);
    const std::size_t n = 1 + rng.uniform_index(6);
    std::vector<ModelSpec> specs{logistic(in, k), mlp(in, 1 + rng.uniform_index(5), k),
                                 mlp(in, 1 + rng.uniform_index(5), k, Activation::kTanh)};
    for (const auto& spec : specs) {
      auto data = testutil::random_dataset(rng, n, in, k);
      auto params = testutil::random_vector(rng, spec.param_count(), 0.8);
      Batch b = Batch::labeled(data);

      auto ce = ce_loss_and_grad(spec, params, b);
      auto fd = testutil::numeric_gradient(
          [&](const std::vector<double>& p) { return ce_loss(spec, p, b); }, params);
      CHECK(testutil::rel_err(ce.grad, fd) < 1e-4);

      const double t = 0.5 + 2.0 * rng.uniform();
      Matrix tgt(n, k);
      for (std::size_t i = 0; i < n; ++i) {
        auto d = rng.dirichlet(k, 1.0);
        for (std::size_t j = 0; j < k; ++j) tgt(i, j) = d[j];
      }
      b.targets = tgt;
      auto kl = kl_loss_and_grad(spec, params, b, t);
      auto fdk = testutil::numeric_gradient(
          [&](const std::vector<double>& p) { return kl_loss(spec, p, b, t); }, params);
      CHECK(testutil::rel_err(kl.grad, fdk) < 1e-4);
      instances += 2;
    }
  }
  CHECK(instances >= 100);
}

TEST_CASE("evaluate") {
  // Class 0 on the positive x-axis, class 1 on the negative one.
  Dataset toy;
  toy.inputs = Matrix(4, 2);
  toy.inputs.data = {1, 0, 2, 0, -1, 0, -2, 0};
  toy.labels = {0, 0, 1, 1};
  toy.num_classes = 2;
  auto spec = logistic(2, 2);
  ParamVector sep{1, 0, -1, 0, 0, 0};
  CHECK(evaluate(spec, sep, toy).accuracy == 1.0);

  ParamVector zero(6, 0.0);
  auto r = evaluate(spec, zero, toy);
  CHECK(r.accuracy == 0.5);
  CHECK(r.mean_loss == doctest::Approx(std::log(2.0)));
  CHECK(evaluate(spec, zero, toy).accuracy == r.accuracy);

  CHECK(argmax(std::vector<double>{1, 3, 3}) == 1);
  Dataset empty;
  empty.num_classes = 2;
  empty.inputs = Matrix(0, 2);
  CHECK_THROWS_AS(evaluate(spec, zero, empty), InvalidArgument);
}
