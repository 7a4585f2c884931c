#include "smartfl/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "smartfl/aggregation.hpp"
#include "smartfl/attacks.hpp"
#include "smartfl/client.hpp"
#include "smartfl/core_math.hpp"
#include "smartfl/experiment.hpp"
#include "smartfl/metrics.hpp"
#include "smartfl/models.hpp"

namespace smartfl {

namespace {

constexpr std::uint64_t kCheckSeed = 20240517;

std::vector<double> random_vector(SeededRng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(0.0, scale);
  return v;
}

CoefficientVector random_simplex_point(SeededRng& rng, std::size_t n) {
  return CoefficientVector::from_weights(rng.dirichlet(n, 1.0));
}

ModelSpec random_spec(SeededRng& rng, std::size_t instance) {
  ModelSpec spec;
  spec.input_dim = 2 + rng.uniform_index(5);
  spec.num_classes = 2 + rng.uniform_index(4);
  switch (instance % 3) {
    case 0: spec.kind = ModelKind::kLogistic; break;
    case 1:
      spec.kind = ModelKind::kMlp;
      spec.hidden_dim = 2 + rng.uniform_index(5);
      spec.activation = Activation::kRelu;
      break;
    default:
      spec.kind = ModelKind::kMlp;
      spec.hidden_dim = 2 + rng.uniform_index(5);
      spec.activation = Activation::kTanh;
      break;
  }
  return spec;
}

Batch random_batch(SeededRng& rng, const ModelSpec& spec, bool soft) {
  Batch b;
  const std::size_t n = 1 + rng.uniform_index(6);
  b.inputs = Matrix(n, spec.input_dim);
  for (auto& x : b.inputs.data) x = rng.normal();
  if (soft) {
    Matrix t(n, spec.num_classes);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = rng.dirichlet(spec.num_classes, 1.0);
      std::copy(p.begin(), p.end(), t.row(i).begin());
    }
    b.targets = std::move(t);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      b.labels.push_back(static_cast<int>(rng.uniform_index(spec.num_classes)));
    }
  }
  return b;
}

std::string fmt(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

CheckResult check_projection_oracle() {
  SeededRng rng(kCheckSeed, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = trial % 2 == 0 ? 2 : 3;
    const double step = dim == 2 ? 1e-4 : 2e-3;
    const auto v = random_vector(rng, dim, 1.0);
    const auto oracle = grid_simplex_projection(v, step);
    const auto got = project_simplex(v);
    for (std::size_t i = 0; i < dim; ++i) {
      worst = std::max(worst, std::abs(got[i] - oracle[i]) / step);
    }
  }
  return {"simplex projection matches grid oracle (dims 2-3)", worst <= 2.0,
          "max deviation " + fmt(worst) + " grid steps"};
}

CheckResult check_projection_idempotent() {
  SeededRng rng(kCheckSeed, 2);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = random_vector(rng, 1 + rng.uniform_index(12), 2.0);
    const auto once = project_simplex(v);
    const auto twice = project_simplex(once.values());
    if (!(once == twice)) return {"simplex projection idempotent", false, "trial " + std::to_string(trial)};
  }
  return {"simplex projection idempotent", true, "500 random vectors"};
}

CheckResult check_model_gradients() {
  SeededRng rng(kCheckSeed, 3);
  double worst = 0.0;
  constexpr std::size_t kInstances = 120;
  for (std::size_t inst = 0; inst < kInstances; ++inst) {
    const ModelSpec spec = random_spec(rng, inst);
    SeededRng init_rng = rng.split(inst);
    ParamVector params = init_params(spec, init_rng);
    for (auto& p : params) p += rng.normal(0.0, 0.3);
    const bool soft = inst % 2 == 1;
    const Batch batch = random_batch(rng, spec, soft);
    const double temperature = soft ? 0.5 + rng.uniform() * 2.0 : 1.0;
    const LossGrad lg = soft ? kl_loss_and_grad(spec, params, batch, temperature)
                             : ce_loss_and_grad(spec, params, batch);
    const auto fd = finite_difference_gradient(
        [&](const std::vector<double>& w) {
          return soft ? kl_loss(spec, w, batch, temperature) : ce_loss(spec, w, batch);
        },
        params, 1e-5);
    worst = std::max(worst, relative_error(lg.grad, fd));
  }
  return {"model gradients match finite differences (120 instances)", worst < 1e-4,
          "max relative error " + fmt(worst)};
}

CheckResult check_coefficient_gradient() {
  SeededRng rng(kCheckSeed, 4);
  double worst = 0.0;
  constexpr std::size_t kInstances = 100;
  for (std::size_t inst = 0; inst < kInstances; ++inst) {
    const ModelSpec spec = random_spec(rng, inst);
    const std::size_t n = 2 + rng.uniform_index(5);
    std::vector<ParamVector> models;
    for (std::size_t m = 0; m < n; ++m) {
      SeededRng mr = rng.split(inst * 16 + m);
      models.push_back(init_params(spec, mr));
    }
    const Batch batch = random_batch(rng, spec, false);
    const CoefficientVector p = random_simplex_point(rng, n);
    const ParamVector w = convex_combine(models, p);
    const auto analytic = coefficient_gradient(models, ce_loss_and_grad(spec, w, batch).grad);
    // Differentiate the unconstrained map p -> loss(sum_m p_m w_m).
    auto loss_at = [&](const std::vector<double>& q) {
      ParamVector mix(w.size(), 0.0);
      for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += q[m] * models[m][i];
      }
      return ce_loss(spec, mix, batch);
    };
    const auto fd = finite_difference_gradient(loss_at, p.vector(), 1e-5);
    worst = std::max(worst, relative_error(analytic, fd));
  }
  return {"coefficient gradient matches finite differences (100 instances)", worst < 1e-4,
          "max relative error " + fmt(worst)};
}

CheckResult check_convex_hull() {
  SeededRng rng(kCheckSeed, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    const std::size_t d = 1 + rng.uniform_index(9);
    std::vector<ParamVector> models;
    for (std::size_t m = 0; m < n; ++m) models.push_back(random_vector(rng, d, 5.0));
    const ParamVector w = convex_combine(models, random_simplex_point(rng, n));
    for (std::size_t i = 0; i < d; ++i) {
      double lo = models[0][i];
      double hi = models[0][i];
      for (const auto& m : models) {
        lo = std::min(lo, m[i]);
        hi = std::max(hi, m[i]);
      }
      if (w[i] < lo || w[i] > hi) {
        return {"convex combination stays in the hull", false, "trial " + std::to_string(trial)};
      }
    }
  }
  return {"convex combination stays in the hull", true, "300 random instances"};
}

CheckResult check_krum_vertex() {
  SeededRng rng(kCheckSeed, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t f = rng.uniform_index(3);
    const std::size_t n = 2 * f + 3 + rng.uniform_index(4);
    std::vector<ClientUpdate> clients;
    for (std::size_t m = 0; m < n; ++m) {
      clients.push_back({random_vector(rng, 6, 1.0), 10, static_cast<int>(m)});
    }
    const auto res = krum(clients, f);
    const bool vertex = std::any_of(clients.begin(), clients.end(),
                                    [&](const ClientUpdate& c) { return c.params == res.global; });
    if (!vertex) return {"krum returns an input model", false, "trial " + std::to_string(trial)};
  }
  return {"krum returns an input model", true, "100 random instances"};
}

CheckResult check_robust_range() {
  SeededRng rng(kCheckSeed, 7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(6);
    const double beta = 0.2 + 0.05 * static_cast<double>(rng.uniform_index(5));
    const auto trim = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n) + 1e-9));
    // Outliers strictly fewer than both the trim level and half the clients.
    const std::size_t bad = std::min(trim, (n - 1) / 2);
    const std::size_t d = 4;
    std::vector<ClientUpdate> clients;
    std::vector<double> lo(d, 1e300), hi(d, -1e300);
    for (std::size_t m = 0; m < n; ++m) {
      ParamVector w(d);
      for (std::size_t i = 0; i < d; ++i) {
        if (m < bad) {
          w[i] = rng.uniform() < 0.5 ? -1e6 : 1e6;
        } else {
          w[i] = rng.normal();
          lo[i] = std::min(lo[i], w[i]);
          hi[i] = std::max(hi[i], w[i]);
        }
      }
      clients.push_back({w, 1, static_cast<int>(m)});
    }
    const auto med = coord_median(clients).global;
    const auto tm = trimmed_mean(clients, beta).global;
    for (std::size_t i = 0; i < d; ++i) {
      if (med[i] < lo[i] || med[i] > hi[i] || tm[i] < lo[i] || tm[i] > hi[i]) {
        return {"median / trimmed mean stay in benign range with 1e6 outliers", false,
                "trial " + std::to_string(trial)};
      }
    }
  }
  return {"median / trimmed mean stay in benign range with 1e6 outliers", true, "100 random instances"};
}

CheckResult check_smartfl_descent() {
  ExperimentConfig cfg = check_config();
  cfg.aggregation.strategy = Strategy::kSmartFl;
  cfg.attack = {AttackKind::kOmniscient, 0.3};
  const Federation fed = build_federation(cfg);
  ParamVector global = initial_model(cfg, fed.model);
  const Batch proxy = Batch::labeled(*fed.proxy);
  double worst_gap = -1e300;
  std::size_t rounds_checked = 0;
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    std::vector<ClientUpdate> updates;
    std::vector<int> bad;
    for (int id : sample_clients(cfg, round)) {
      if (fed.attack.is_malicious(id)) {
        bad.push_back(id);
        continue;
      }
      SeededRng rng(cfg.seed, stream_id(StreamTag::kLocal, round, static_cast<std::uint64_t>(id)));
      updates.push_back(local_update(fed.model, global, fed.shards[static_cast<std::size_t>(id)],
                                     cfg.local, rng, id));
    }
    if (updates.empty()) continue;
    auto poisoned = omniscient_updates(updates, global, bad);
    updates.insert(updates.end(), poisoned.begin(), poisoned.end());
    SeededRng server(cfg.seed, stream_id(StreamTag::kServer, round));
    const auto res = smartfl(updates, *fed.proxy, fed.model, cfg.aggregation, server);
    const double after = ce_loss(fed.model, res.global, proxy);
    double bound = ce_loss(fed.model, fedavg(updates).global, proxy);
    for (const auto& u : updates) bound = std::min(bound, ce_loss(fed.model, u.params, proxy));
    worst_gap = std::max(worst_gap, after - bound);
    ++rounds_checked;
    global = res.global;
  }
  return {"smartfl proxy loss never exceeds FedAVG init or any client (30 rounds)",
          worst_gap <= 0.0 && rounds_checked > 0,
          std::to_string(rounds_checked) + " rounds, max(after - bound) = " + fmt(worst_gap)};
}

CheckResult check_single_client_equivalence() {
  ExperimentConfig cfg = check_config();
  cfg.clients = 1;
  cfg.participation = 1.0;
  cfg.proxy.imbalance.size = 0;
  cfg.aggregation.strategy = Strategy::kFedAvg;
  cfg.rounds = 5;
  const Federation fed = build_federation(cfg);
  const RunResult res = run(cfg, fed);
  ParamVector w = initial_model(cfg, fed.model);
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    SeededRng rng(cfg.seed, stream_id(StreamTag::kLocal, round, 0));
    w = local_update(fed.model, w, fed.shards[0], cfg.local, rng, 0).params;
  }
  return {"fedavg with one client equals centralized training (bit-exact)", w == res.final_global,
          std::to_string(cfg.rounds) + " rounds"};
}

CheckResult check_determinism() {
  ExperimentConfig cfg = check_config();
  cfg.aggregation.strategy = Strategy::kSmartFl;
  cfg.attack = {AttackKind::kLabelFlip, 0.2};
  cfg.rounds = 10;
  std::ostringstream a, b;
  write_csv(run(cfg).records, a);
  write_csv(run(cfg).records, b);
  return {"identical config and seed give byte-identical CSV", a.str() == b.str() && !a.str().empty(),
          std::to_string(a.str().size()) + " bytes"};
}

CheckResult check_rng_determinism() {
  SeededRng a(kCheckSeed, 99), b(kCheckSeed, 99);
  for (int i = 0; i < 10000; ++i) {
    if (a.next_u64() != b.next_u64() || a.normal() != b.normal()) {
      return {"seeded RNG reproducible", false, "draw " + std::to_string(i)};
    }
  }
  return {"seeded RNG reproducible", true, "10000 paired draws"};
}

}  // namespace

ExperimentConfig check_config() {
  ExperimentConfig cfg;
  cfg.data.synthetic = {4, 6, 60, 20, 3.0};
  cfg.clients = 10;
  cfg.participation = 0.5;
  cfg.alpha = 0.3;
  cfg.rounds = 30;
  cfg.proxy.imbalance = {1.0, 24};
  cfg.local.epochs = 1;
  cfg.local.batch_size = 16;
  cfg.local.optimizer.lr = 1e-2;
  cfg.aggregation.server_epochs = 5;
  cfg.aggregation.server_batch = 8;
  cfg.seed = kCheckSeed;
  return cfg;
}

std::vector<double> grid_simplex_projection(const std::vector<double>& v, double step) {
  const auto steps = static_cast<long>(std::llround(1.0 / step));
  std::vector<double> best;
  double best_dist = 1e300;
  auto consider = [&](const std::vector<double>& x) {
    double dist = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dist += (x[i] - v[i]) * (x[i] - v[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  };
  if (v.size() == 1) return {1.0};
  if (v.size() == 2) {
    for (long i = 0; i <= steps; ++i) {
      const double a = static_cast<double>(i) / static_cast<double>(steps);
      consider({a, 1.0 - a});
    }
    return best;
  }
  for (long i = 0; i <= steps; ++i) {
    for (long j = 0; i + j <= steps; ++j) {
      const double a = static_cast<double>(i) / static_cast<double>(steps);
      const double b = static_cast<double>(j) / static_cast<double>(steps);
      consider({a, b, std::max(0.0, 1.0 - a - b)});
    }
  }
  return best;
}

std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x, double h) {
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

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

std::vector<CheckResult> run_check_suite() {
  return {
      check_rng_determinism(),
      check_projection_oracle(),
      check_projection_idempotent(),
      check_model_gradients(),
      check_coefficient_gradient(),
      check_convex_hull(),
      check_krum_vertex(),
      check_robust_range(),
      check_smartfl_descent(),
      check_single_client_equivalence(),
      check_determinism(),
  };
}

bool run_checks(std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (const auto& r : run_check_suite()) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  [" << r.detail << "]\n";
    ok = ok && r.passed;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << (ok ? "all checks passed" : "some checks FAILED") << " in " << secs << " s\n";
  return ok;
}

}  // namespace smartfl
