#include "rntraj/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace rntraj {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adagrad"; }

OptimizerKind optimizer_kind_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adagrad") return OptimizerKind::adagrad;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected sgd or adagrad)");
}

namespace {

void require_grads(std::span<Tensor> params, std::string_view who) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw std::logic_error(std::string(who) + ": parameter " + std::to_string(i) + " has no gradient");
    }
  }
}

}  // namespace

void sgd_step(std::span<Tensor> params, OptimizerState& state) {
  if (state.kind != OptimizerKind::sgd) throw std::logic_error("sgd_step: optimizer state is not sgd");
  require_grads(params, "sgd_step");
  const double lr = state.learning_rate;
  const double wd = state.weight_decay;
  for (auto& p : params) {
    auto values = p.data_mut();
    auto grad = p.grad_mut();
    if (lr != 0.0) {
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * (grad[i] + wd * values[i]);
    }
    p.zero_grad();
  }
}

void adagrad_step(std::span<Tensor> params, OptimizerState& state) {
  if (state.kind != OptimizerKind::adagrad) throw std::logic_error("adagrad_step: optimizer state is not adagrad");
  require_grads(params, "adagrad_step");
  if (state.accumulators.empty()) {
    for (const auto& p : params) state.accumulators.emplace_back(p.numel(), 0.0);
  }
  if (state.accumulators.size() != params.size()) {
    throw std::logic_error("adagrad_step: accumulator count does not match parameter count");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].data_mut();
    auto grad = params[k].grad_mut();
    auto& accum = state.accumulators[k];
    if (accum.size() != values.size()) throw std::logic_error("adagrad_step: accumulator size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i] + state.weight_decay * values[i];
      accum[i] += g * g;
      values[i] -= state.learning_rate * g / (std::sqrt(accum[i]) + state.epsilon);
    }
    params[k].zero_grad();
  }
}

void optimizer_step(std::span<Tensor> params, OptimizerState& state) {
  if (state.kind == OptimizerKind::sgd) {
    sgd_step(params, state);
  } else {
    adagrad_step(params, state);
  }
}

double clip_grad_norm(std::span<Tensor> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.grad_mut()) g *= factor;
    }
  }
  return norm;
}

}  // namespace rntraj
