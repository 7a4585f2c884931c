#include "smartfl/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smartfl/errors.hpp"

namespace smartfl {

namespace {

// Views into a flat parameter vector.
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<Layer> layers_of(const ModelSpec& spec) {
  if (spec.kind == ModelKind::kLogistic) {
    const std::size_t w = spec.num_classes * spec.input_dim;
    return {Layer{spec.input_dim, spec.num_classes, 0, w}};
  }
  const std::size_t w1 = spec.hidden_dim * spec.input_dim;
  const std::size_t l2 = w1 + spec.hidden_dim;
  const std::size_t w2 = spec.num_classes * spec.hidden_dim;
  return {Layer{spec.input_dim, spec.hidden_dim, 0, w1},
          Layer{spec.hidden_dim, spec.num_classes, l2, l2 + w2}};
}

void check_params(const ModelSpec& spec, std::span<const double> params, std::size_t cols) {
  if (params.size() != spec.param_count()) {
    throw InvalidArgument("model: expected " + std::to_string(spec.param_count()) +
                          " parameters, got " + std::to_string(params.size()));
  }
  if (cols != spec.input_dim) {
    throw InvalidArgument("model: input has " + std::to_string(cols) + " features, spec expects " +
                          std::to_string(spec.input_dim));
  }
}

// out = x W^T + b for one layer.
Matrix affine(const Matrix& x, std::span<const double> params, const Layer& layer) {
  Matrix out(x.rows, layer.out);
  const double* w = params.data() + layer.weight_offset;
  const double* b = params.data() + layer.bias_offset;
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto xi = x.row(i);
    auto oi = out.row(i);
    for (std::size_t k = 0; k < layer.out; ++k) {
      const double* wk = w + k * layer.in;
      double s = b[k];
      for (std::size_t j = 0; j < layer.in; ++j) s += wk[j] * xi[j];
      oi[k] = s;
    }
  }
  return out;
}

// Accumulates dW += delta^T x, db += sum(delta) and optionally returns delta W.
void affine_backward(const Matrix& x, const Matrix& delta, std::span<const double> params,
                     const Layer& layer, ParamVector& grad, Matrix* dx) {
  double* gw = grad.data() + layer.weight_offset;
  double* gb = grad.data() + layer.bias_offset;
  const double* w = params.data() + layer.weight_offset;
  if (dx) *dx = Matrix(x.rows, layer.in);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto xi = x.row(i);
    auto di = delta.row(i);
    for (std::size_t k = 0; k < layer.out; ++k) {
      const double dk = di[k];
      if (dk == 0.0) continue;
      gb[k] += dk;
      double* gwk = gw + k * layer.in;
      for (std::size_t j = 0; j < layer.in; ++j) gwk[j] += dk * xi[j];
      if (dx) {
        const double* wk = w + k * layer.in;
        auto dxi = dx->row(i);
        for (std::size_t j = 0; j < layer.in; ++j) dxi[j] += dk * wk[j];
      }
    }
  }
}

struct ForwardPass {
  Matrix hidden_pre;  // mlp only
  Matrix hidden;      // mlp only
  Matrix logits;
};

ForwardPass run_forward(const ModelSpec& spec, std::span<const double> params,
                        const Matrix& inputs) {
  check_params(spec, params, inputs.cols);
  const auto layers = layers_of(spec);
  ForwardPass fp;
  if (spec.kind == ModelKind::kLogistic) {
    fp.logits = affine(inputs, params, layers[0]);
    return fp;
  }
  fp.hidden_pre = affine(inputs, params, layers[0]);
  fp.hidden = fp.hidden_pre;
  for (auto& h : fp.hidden.data) {
    h = spec.activation == Activation::kRelu ? std::max(h, 0.0) : std::tanh(h);
  }
  fp.logits = affine(fp.hidden, params, layers[1]);
  return fp;
}

ParamVector run_backward(const ModelSpec& spec, std::span<const double> params,
                         const Matrix& inputs, const ForwardPass& fp, const Matrix& dlogits) {
  const auto layers = layers_of(spec);
  ParamVector grad(params.size(), 0.0);
  if (spec.kind == ModelKind::kLogistic) {
    affine_backward(inputs, dlogits, params, layers[0], grad, nullptr);
    return grad;
  }
  Matrix dhidden;
  affine_backward(fp.hidden, dlogits, params, layers[1], grad, &dhidden);
  for (std::size_t i = 0; i < dhidden.data.size(); ++i) {
    if (spec.activation == Activation::kRelu) {
      // sub-gradient 0 at the kink
      if (fp.hidden_pre.data[i] <= 0.0) dhidden.data[i] = 0.0;
    } else {
      const double t = fp.hidden.data[i];
      dhidden.data[i] *= 1.0 - t * t;
    }
  }
  affine_backward(inputs, dhidden, params, layers[0], grad, nullptr);
  return grad;
}

double log_sum_exp(std::span<const double> row) {
  const double top = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double z : row) s += std::exp(z - top);
  return top + std::log(s);
}

void check_labels(const Batch& batch, std::size_t num_classes) {
  if (batch.labels.size() != batch.size()) {
    throw InvalidArgument("ce loss: batch is not labeled (" + std::to_string(batch.labels.size()) +
                          " labels for " + std::to_string(batch.size()) + " rows)");
  }
  if (batch.size() == 0) throw InvalidArgument("ce loss: empty batch");
  for (int y : batch.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InvalidArgument("ce loss: label " + std::to_string(y) + " out of range");
    }
  }
}

const Matrix& check_targets(const Batch& batch, std::size_t num_classes) {
  if (!batch.targets) throw InvalidArgument("kl loss: batch carries no target distribution");
  const Matrix& t = *batch.targets;
  if (t.rows != batch.size() || t.cols != num_classes) {
    throw InvalidArgument("kl loss: target shape does not match batch");
  }
  if (batch.size() == 0) throw InvalidArgument("kl loss: empty batch");
  for (std::size_t i = 0; i < t.rows; ++i) {
    double s = 0.0;
    for (double x : t.row(i)) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw InvalidArgument("kl loss: target row " + std::to_string(i) + " has invalid entry");
      }
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw InvalidArgument("kl loss: target row " + std::to_string(i) + " sums to " +
                            std::to_string(s));
    }
  }
  return t;
}

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("kl loss: temperature must be positive");
  }
}

}  // namespace

std::size_t ModelSpec::param_count() const {
  if (kind == ModelKind::kLogistic) return num_classes * input_dim + num_classes;
  return hidden_dim * input_dim + hidden_dim + num_classes * hidden_dim + num_classes;
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw InvalidArgument("model spec: input_dim must be positive");
  if (num_classes < 2) throw InvalidArgument("model spec: num_classes must be >= 2");
  if (kind == ModelKind::kMlp && hidden_dim == 0) {
    throw InvalidArgument("model spec: mlp needs hidden_dim > 0");
  }
  if (kind == ModelKind::kLogistic && hidden_dim != 0) {
    throw InvalidArgument("model spec: logistic model takes hidden_dim = 0");
  }
}

std::string to_string(ModelKind kind) { return kind == ModelKind::kLogistic ? "logistic" : "mlp"; }
std::string to_string(Activation act) { return act == Activation::kRelu ? "relu" : "tanh"; }

ParamVector init_params(const ModelSpec& spec, SeededRng& rng) {
  spec.validate();
  ParamVector params(spec.param_count(), 0.0);
  for (const auto& layer : layers_of(spec)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      params[layer.weight_offset + i] = rng.uniform(-bound, bound);
    }
  }
  return params;
}

Matrix forward(const ModelSpec& spec, std::span<const double> params, const Matrix& inputs) {
  return run_forward(spec, params, inputs).logits;
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
  Matrix out = logits;
  for (std::size_t i = 0; i < out.rows; ++i) {
    auto r = out.row(i);
    for (auto& z : r) z /= temperature;
    const double top = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (auto& z : r) {
      z = std::exp(z - top);
      s += z;
    }
    for (auto& z : r) z /= s;
  }
  return out;
}

LossGrad ce_loss_and_grad(const ModelSpec& spec, std::span<const double> params,
                          const Batch& batch) {
  check_labels(batch, spec.num_classes);
  const ForwardPass fp = run_forward(spec, params, batch.inputs);
  const double n = static_cast<double>(batch.size());
  Matrix dlogits = softmax_rows(fp.logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    loss += log_sum_exp(fp.logits.row(i)) - fp.logits(i, y);
    dlogits(i, y) -= 1.0;
  }
  for (auto& g : dlogits.data) g /= n;
  return {loss / n, run_backward(spec, params, batch.inputs, fp, dlogits)};
}

double ce_loss(const ModelSpec& spec, std::span<const double> params, const Batch& batch) {
  check_labels(batch, spec.num_classes);
  const Matrix logits = forward(spec, params, batch.inputs);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss += log_sum_exp(logits.row(i)) - logits(i, static_cast<std::size_t>(batch.labels[i]));
  }
  return loss / static_cast<double>(batch.size());
}

namespace {

double kl_rows(const Matrix& targets, const Matrix& logits, double temperature) {
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto z = logits.row(i);
    std::vector<double> scaled(z.begin(), z.end());
    for (auto& s : scaled) s /= temperature;
    const double lse = log_sum_exp(scaled);
    auto t = targets.row(i);
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] > 0.0) loss += t[k] * (std::log(t[k]) - (scaled[k] - lse));
    }
  }
  return loss / static_cast<double>(logits.rows);
}

}  // namespace

LossGrad kl_loss_and_grad(const ModelSpec& spec, std::span<const double> params,
                          const Batch& batch, double temperature) {
  check_temperature(temperature);
  const Matrix& targets = check_targets(batch, spec.num_classes);
  const ForwardPass fp = run_forward(spec, params, batch.inputs);
  const double loss = kl_rows(targets, fp.logits, temperature);
  Matrix dlogits = softmax_rows(fp.logits, temperature);
  const double scale = 1.0 / (static_cast<double>(batch.size()) * temperature);
  for (std::size_t i = 0; i < dlogits.data.size(); ++i) {
    dlogits.data[i] = (dlogits.data[i] - targets.data[i]) * scale;
  }
  return {loss, run_backward(spec, params, batch.inputs, fp, dlogits)};
}

double kl_loss(const ModelSpec& spec, std::span<const double> params, const Batch& batch,
               double temperature) {
  check_temperature(temperature);
  const Matrix& targets = check_targets(batch, spec.num_classes);
  return kl_rows(targets, forward(spec, params, batch.inputs), temperature);
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

EvalReport evaluate(const ModelSpec& spec, std::span<const double> params, const Dataset& data) {
  if (data.size() == 0) throw InvalidArgument("evaluate: empty dataset");
  const Matrix logits = forward(spec, params, data.inputs);
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = logits.row(i);
    const auto y = static_cast<std::size_t>(data.labels[i]);
    if (argmax(row) == y) ++correct;
    loss += log_sum_exp(row) - row[y];
  }
  const double n = static_cast<double>(data.size());
  return {static_cast<double>(correct) / n, loss / n};
}

}  // namespace smartfl
