#pragma once

#include <cstddef>
#include <string>

#include "smartfl/core_math.hpp"
#include "smartfl/dataset.hpp"
#include "smartfl/rng.hpp"

namespace smartfl {

enum class ModelKind { kLogistic, kMlp };
enum class Activation { kRelu, kTanh };

/// Architecture of a small classifier over a flat ParamVector.
///
/// Parameter layout (row-major):
///   logistic: W[num_classes x input_dim], b[num_classes]
///   mlp:      W1[hidden x input_dim], b1[hidden], W2[num_classes x hidden], b2[num_classes]
struct ModelSpec {
  ModelKind kind = ModelKind::kLogistic;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t num_classes = 2;
  Activation activation = Activation::kRelu;

  std::size_t param_count() const;
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

std::string to_string(ModelKind kind);
std::string to_string(Activation act);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

struct EvalReport {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ParamVector init_params(const ModelSpec& spec, SeededRng& rng);

Matrix forward(const ModelSpec& spec, std::span<const double> params, const Matrix& inputs);
inline Matrix forward(const ModelSpec& spec, std::span<const double> params, const Batch& batch) {
  return forward(spec, params, batch.inputs);
}

/// Row-wise softmax of logits / temperature.
Matrix softmax_rows(const Matrix& logits, double temperature = 1.0);

/// Mean softmax cross-entropy over a labeled batch, with its analytic gradient.
LossGrad ce_loss_and_grad(const ModelSpec& spec, std::span<const double> params,
                          const Batch& batch);

/// Mean KL(target || softmax(logits / temperature)) with its analytic gradient.
LossGrad kl_loss_and_grad(const ModelSpec& spec, std::span<const double> params,
                          const Batch& batch, double temperature = 1.0);

/// Loss only; skips the backward pass.
double ce_loss(const ModelSpec& spec, std::span<const double> params, const Batch& batch);
double kl_loss(const ModelSpec& spec, std::span<const double> params, const Batch& batch,
               double temperature = 1.0);

/// Accuracy (argmax, ties to the lowest class index) and mean cross-entropy.
EvalReport evaluate(const ModelSpec& spec, std::span<const double> params, const Dataset& data);

/// Index of the largest entry; lowest index wins ties.
std::size_t argmax(std::span<const double> row);

}  // namespace smartfl
