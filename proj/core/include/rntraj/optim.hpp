#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rntraj/tensor.hpp"

namespace rntraj {

enum class OptimizerKind { sgd, adagrad };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 1e-2;
  double weight_decay = 0.0;
  double epsilon = 1e-10;
  /// AdaGrad running sums of squared gradients, one per parameter tensor.
  std::vector<std::vector<double>> accumulators;
};

/// p <- p - lr * (grad + wd * p), then zero the gradients.
void sgd_step(std::span<Tensor> params, OptimizerState& state);

/// accum <- accum + g^2; p <- p - lr * g / (sqrt(accum) + eps), with
/// g = grad + wd * p. Gradients are zeroed afterwards.
void adagrad_step(std::span<Tensor> params, OptimizerState& state);

/// Dispatches on `state.kind`.
void optimizer_step(std::span<Tensor> params, OptimizerState& state);

/// Rescales all gradients so their joint L2 norm is at most `max_norm`
/// (no-op when max_norm <= 0). Returns the norm before clipping.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

}  // namespace rntraj
