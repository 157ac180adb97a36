#include "rntraj/local_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rntraj/error.hpp"

namespace rntraj {

namespace {

constexpr std::size_t kOutputChannels = 5;
constexpr std::size_t kKernel = 3;

std::string tap_name(const char* prefix, std::size_t k) { return std::string(prefix) + std::to_string(k); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in;
};

std::vector<ParamSpec> parameter_layout(const LocalConfig& c) {
  const auto hidden = static_cast<std::size_t>(c.hidden_dim);
  const auto fusion = static_cast<std::size_t>(c.fusion_dim);
  const auto t_obs = static_cast<std::size_t>(c.t_obs);
  const auto t_pred = static_cast<std::size_t>(c.t_pred);
  const auto latent = static_cast<std::size_t>(c.trip_latent_dim);
  const auto channels = static_cast<std::size_t>(c.adapter_channels);
  const auto adapter_hidden = static_cast<std::size_t>(c.adapter_hidden);
  std::vector<ParamSpec> specs = {
      {"spatial.w", {2, hidden}, 2},
      {"spatial.b", {hidden}, 2},
  };
  if (latent > 0) {
    specs.push_back({"adapter.conv_w", {kKernel, channels}, kKernel});
    specs.push_back({"adapter.conv_b", {channels}, kKernel});
    specs.push_back({"adapter.w1", {latent * channels, adapter_hidden}, latent * channels});
    specs.push_back({"adapter.b1", {adapter_hidden}, latent * channels});
    specs.push_back({"adapter.w2", {adapter_hidden, fusion}, adapter_hidden});
    specs.push_back({"adapter.b2", {fusion}, adapter_hidden});
    specs.push_back({"fusion.alpha", {1, 1}, 1});
  }
  for (std::size_t k = 0; k < kKernel; ++k) {
    specs.push_back({tap_name("temporal.w", k), {hidden + fusion, hidden}, kKernel * (hidden + fusion)});
  }
  specs.push_back({"temporal.b", {hidden}, kKernel * (hidden + fusion)});
  for (std::size_t k = 0; k < kKernel; ++k) specs.push_back({tap_name("txp.w", k), {t_pred, t_obs}, kKernel * t_obs});
  specs.push_back({"txp.b", {t_pred, 1}, kKernel * t_obs});
  specs.push_back({"head.w", {hidden, kOutputChannels}, hidden});
  specs.push_back({"head.b", {kOutputChannels}, hidden});
  return specs;
}

// Rows shifted by `offset` blocks of `block` rows with zero fill, i.e. the
// tensor seen at time t + offset for a (steps*block, width) layout.
Tensor zero_pad_rows(const Tensor& x, std::size_t block) {
  const std::size_t width = x.dim(1);
  Tensor pad = Tensor::zeros({block, width});
  return concat({pad, x, pad}, 0);
}

// Column c of the result holds column c + shift of x (shift in {-1, +1}),
// zero where that falls outside.
Tensor shift_columns(const Tensor& x, int shift) {
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  Tensor zero = Tensor::zeros({rows, 1});
  if (shift < 0) return concat({zero, slice(x, 1, 0, cols - 1)}, 1);
  return concat({slice(x, 1, 1, cols), zero}, 1);
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor SocialGraph::block_diagonal() const {
  const std::size_t n = steps * peds;
  std::vector<double> values(n * n, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < peds; ++i) {
      for (std::size_t j = 0; j < peds; ++j) values[(t * peds + i) * n + t * peds + j] = normalized_at(t, i, j);
    }
  }
  return Tensor({n, n}, std::move(values));
}

SocialGraph build_social_graph(std::span<const Vec2> positions, std::size_t steps, std::size_t peds,
                               double neighbor_distance) {
  if (peds < 1 || steps < 1) throw std::invalid_argument("build_social_graph: need at least one step and pedestrian");
  if (positions.size() != steps * peds) throw ShapeError("build_social_graph: positions do not match (steps, peds)");
  SocialGraph g;
  g.steps = steps;
  g.peds = peds;
  g.kernel.assign(steps * peds * peds, 0.0);
  g.normalized.assign(steps * peds * peds, 0.0);
  std::vector<double> degree(peds);
  for (std::size_t t = 0; t < steps; ++t) {
    double* k = &g.kernel[t * peds * peds];
    for (std::size_t i = 0; i < peds; ++i) {
      for (std::size_t j = i + 1; j < peds; ++j) {
        const Vec2& a = positions[t * peds + i];
        const Vec2& b = positions[t * peds + j];
        const double dist = std::hypot(a.x - b.x, a.y - b.y);
        const double w = (dist > 0.0 && dist <= neighbor_distance) ? 1.0 / dist : 0.0;
        k[i * peds + j] = w;
        k[j * peds + i] = w;
      }
    }
    for (std::size_t i = 0; i < peds; ++i) {
      degree[i] = 1.0;
      for (std::size_t j = 0; j < peds; ++j) degree[i] += k[i * peds + j];
    }
    double* out = &g.normalized[t * peds * peds];
    for (std::size_t i = 0; i < peds; ++i) {
      for (std::size_t j = 0; j < peds; ++j) {
        const double a = k[i * peds + j] + (i == j ? 1.0 : 0.0);
        out[i * peds + j] = a / std::sqrt(degree[i] * degree[j]);
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

double GaussianTrajectoryParams::sigma_x(std::size_t t, std::size_t i) const { return std::exp(value(t, i, 2)); }
double GaussianTrajectoryParams::sigma_y(std::size_t t, std::size_t i) const { return std::exp(value(t, i, 3)); }
double GaussianTrajectoryParams::rho(std::size_t t, std::size_t i) const { return std::tanh(value(t, i, 4)); }

GaussianTrajectoryParams GaussianTrajectoryParams::from_moments(std::size_t steps, std::size_t peds,
                                                                std::span<const Vec2> mu, std::span<const Vec2> sigma,
                                                                std::span<const double> rho) {
  const std::size_t n = steps * peds;
  if (mu.size() != n || sigma.size() != n || rho.size() != n) throw ShapeError("from_moments: size mismatch");
  std::vector<double> raw;
  raw.reserve(n * kOutputChannels);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(sigma[k].x > 0.0 && sigma[k].y > 0.0) || !(std::fabs(rho[k]) < 1.0)) {
      throw std::invalid_argument("from_moments: sigma must be positive and |rho| < 1");
    }
    raw.insert(raw.end(), {mu[k].x, mu[k].y, std::log(sigma[k].x), std::log(sigma[k].y), std::atanh(rho[k])});
  }
  return {Tensor({n, kOutputChannels}, std::move(raw)), steps, peds};
}

// ---------------------------------------------------------------------------

void LocalConfig::validate() const {
  if (t_obs < 1 || t_pred < 1) throw std::invalid_argument("LocalConfig: t_obs and t_pred must be positive");
  if (hidden_dim < 2) throw std::invalid_argument("LocalConfig: hidden_dim must be at least 2");
  if (fusion_dim < 1 || adapter_channels < 1 || adapter_hidden < 1) {
    throw std::invalid_argument("LocalConfig: fusion_dim, adapter_channels and adapter_hidden must be positive");
  }
  if (trip_latent_dim < 0) throw std::invalid_argument("LocalConfig: trip_latent_dim must be nonnegative");
  if (!std::isfinite(alpha_init)) throw std::invalid_argument("LocalConfig: alpha_init must be finite");
  if (!(neighbor_distance > 0.0)) throw std::invalid_argument("LocalConfig: neighbor_distance must be positive");
}

LocalModel::LocalModel(LocalConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  for (auto& spec : parameter_layout(config_)) {
    if (spec.name == "fusion.alpha") {
      params_.add(spec.name, Tensor::full(spec.shape, config_.alpha_init));
    } else {
      params_.add(spec.name, uniform_init(spec.shape, spec.fan_in, rng));
    }
  }
}

LocalModel::LocalModel(LocalConfig config, ParameterSet params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto layout = parameter_layout(config_);
  if (layout.size() != params_.size()) {
    throw FormatError("local model expects " + std::to_string(layout.size()) + " parameter tensors, got " +
                      std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& e = params_.entries()[i];
    if (e.name != layout[i].name || e.value.shape() != layout[i].shape) {
      throw FormatError("local model parameter '" + e.name + "' " + shape_to_string(e.value.shape()) +
                        " does not match expected '" + layout[i].name + "' " + shape_to_string(layout[i].shape));
    }
  }
}

LocalModel LocalModel::clone() const { return LocalModel(config_, params_.clone()); }

Tensor fusion_adapter(const LocalModel& model, const Tensor& trip_latent) {
  const auto& c = model.config();
  const auto latent = static_cast<std::size_t>(c.trip_latent_dim);
  if (latent == 0) throw std::logic_error("fusion_adapter: model was built without trip-latent inputs");
  if (trip_latent.numel() != latent) {
    throw ShapeError("fusion_adapter: trip latent has " + std::to_string(trip_latent.numel()) +
                     " values, model expects " + std::to_string(latent));
  }
  const auto& p = model.params();
  Tensor column = zero_pad_rows(reshape(trip_latent, {latent, 1}), 1);  // (L + 2, 1)
  const Tensor& conv_w = p.get("adapter.conv_w");
  Tensor conv;
  for (std::size_t k = 0; k < kKernel; ++k) {
    Tensor term = matmul(slice(column, 0, k, k + latent), slice(conv_w, 0, k, k + 1));
    conv = conv.defined() ? add(conv, term) : term;
  }
  conv = relu(add(conv, p.get("adapter.conv_b")));
  Tensor flat = reshape(conv, {1, latent * static_cast<std::size_t>(c.adapter_channels)});
  Tensor hidden = relu(linear(flat, p.get("adapter.w1"), p.get("adapter.b1")));
  return relu(linear(hidden, p.get("adapter.w2"), p.get("adapter.b2")));
}

GaussianTrajectoryParams local_forward(const SequenceWindow& window, const SocialGraph& graph,
                                       const Tensor* trip_latent, const LocalModel& model) {
  const auto& c = model.config();
  const std::size_t n = window.num_peds();
  const auto t_obs = static_cast<std::size_t>(c.t_obs);
  const auto t_pred = static_cast<std::size_t>(c.t_pred);
  const auto hidden = static_cast<std::size_t>(c.hidden_dim);
  const auto fusion = static_cast<std::size_t>(c.fusion_dim);
  if (n == 0) throw ShapeError("local_forward: window has no pedestrians");
  if (window.t_obs != t_obs || window.t_pred != t_pred || window.observed_rel.size() != t_obs * n) {
    throw ShapeError("local_forward: window is not (" + std::to_string(t_obs) + ", " + std::to_string(t_pred) +
                     ") steps with relative features");
  }
  if (graph.steps != t_obs || graph.peds != n) throw ShapeError("local_forward: social graph does not match window");
  const auto& p = model.params();
  const std::size_t rows = t_obs * n;

  std::vector<double> rel;
  rel.reserve(rows * 2);
  for (const auto& v : window.observed_rel) rel.insert(rel.end(), {v.x, v.y});
  Tensor features({rows, 2}, std::move(rel));

  // Social aggregation per observed step.
  Tensor spatial = relu(add(matmul(graph.block_diagonal(), matmul(features, p.get("spatial.w"))), p.get("spatial.b")));

  Tensor trip_channels;
  if (trip_latent != nullptr) {
    Tensor scaled = matmul(p.get("fusion.alpha"), fusion_adapter(model, *trip_latent));  // (1, fusion)
    trip_channels = matmul(Tensor::full({rows, 1}, 1.0), scaled);
  } else {
    trip_channels = Tensor::zeros({rows, fusion});
  }
  Tensor fused = concat({spatial, trip_channels}, -1);  // (rows, hidden + fusion)

  // Temporal convolution (kernel 3 along time, zero padded) with residual.
  Tensor padded = zero_pad_rows(fused, n);
  Tensor temporal;
  for (std::size_t k = 0; k < kKernel; ++k) {
    Tensor term = matmul(slice(padded, 0, k * n, k * n + rows), p.get(tap_name("temporal.w", k)));
    temporal = temporal.defined() ? add(temporal, term) : term;
  }
  Tensor encoded = add(spatial, relu(add(temporal, p.get("temporal.b"))));  // (rows, hidden)

  // Time extrapolation: observed steps act as input channels, predicted
  // steps as output channels; kernel 3 runs along the feature axis.
  const Tensor shifted[kKernel] = {shift_columns(encoded, -1), encoded, shift_columns(encoded, 1)};
  Tensor extrapolated;
  for (std::size_t k = 0; k < kKernel; ++k) {
    Tensor term = matmul(p.get(tap_name("txp.w", k)), reshape(shifted[k], {t_obs, n * hidden}));
    extrapolated = extrapolated.defined() ? add(extrapolated, term) : term;
  }
  extrapolated = add(extrapolated, matmul(p.get("txp.b"), Tensor::full({1, n * hidden}, 1.0)));
  Tensor future = reshape(extrapolated, {t_pred * n, hidden});

  Tensor raw = linear(future, p.get("head.w"), p.get("head.b"));
  return {raw, t_pred, n};
}

Tensor gaussian_nll(const GaussianTrajectoryParams& params, std::span<const Vec2> target_rel) {
  const std::size_t m = params.steps * params.peds;
  if (target_rel.size() != m || params.raw.numel() != m * kOutputChannels) {
    throw ShapeError("gaussian_nll: targets do not match (steps, peds)");
  }
  std::vector<double> tx(m), ty(m);
  for (std::size_t k = 0; k < m; ++k) {
    tx[k] = target_rel[k].x;
    ty[k] = target_rel[k].y;
  }
  const Tensor& raw = params.raw;
  Tensor log_sx = slice(raw, 1, 2, 3);
  Tensor log_sy = slice(raw, 1, 3, 4);
  Tensor rho_raw = slice(raw, 1, 4, 5);
  Tensor rho = tanh(rho_raw);
  Tensor zx = mul(sub(Tensor({m, 1}, std::move(tx)), slice(raw, 1, 0, 1)), exp(scale(log_sx, -1.0)));
  Tensor zy = mul(sub(Tensor({m, 1}, std::move(ty)), slice(raw, 1, 1, 2)), exp(scale(log_sy, -1.0)));
  // log(1 - tanh(r)^2) = 2 log 2 - 2|r| - 2 log(1 + exp(-2|r|)), finite even where tanh saturates.
  Tensor abs_r = abs(rho_raw);
  Tensor log_det = add_scalar(scale(add(abs_r, log(add_scalar(exp(scale(abs_r, -2.0)), 1.0))), -2.0),
                              2.0 * std::numbers::ln2);
  Tensor quad = sub(add(mul(zx, zx), mul(zy, zy)), scale(mul(rho, mul(zx, zy)), 2.0));
  Tensor mahalanobis = scale(mul(quad, exp(scale(log_det, -1.0))), 0.5);
  Tensor point = add_scalar(add(add(add(log_sx, log_sy), scale(log_det, 0.5)), mahalanobis),
                            std::log(2.0 * std::numbers::pi));
  return mean(minimum(point, kMaxPointNll));
}

std::vector<Vec2> sample_trajectory(const GaussianTrajectoryParams& params, Rng& rng,
                                    std::span<const Vec2> last_observed) {
  if (last_observed.size() != params.peds) throw ShapeError("sample_trajectory: last_observed size mismatch");
  std::vector<Vec2> out(params.steps * params.peds);
  std::vector<Vec2> position(last_observed.begin(), last_observed.end());
  for (std::size_t t = 0; t < params.steps; ++t) {
    for (std::size_t i = 0; i < params.peds; ++i) {
      const double sx = params.sigma_x(t, i), sy = params.sigma_y(t, i), r = params.rho(t, i);
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      const double dx = params.mu_x(t, i) + sx * z1;
      const double dy = params.mu_y(t, i) + sy * (r * z1 + std::sqrt(1.0 - r * r) * z2);
      position[i].x += dx;
      position[i].y += dy;
      out[t * params.peds + i] = position[i];
    }
  }
  return out;
}

std::vector<Vec2> mean_trajectory(const GaussianTrajectoryParams& params, std::span<const Vec2> last_observed) {
  if (last_observed.size() != params.peds) throw ShapeError("mean_trajectory: last_observed size mismatch");
  std::vector<Vec2> out(params.steps * params.peds);
  std::vector<Vec2> position(last_observed.begin(), last_observed.end());
  for (std::size_t t = 0; t < params.steps; ++t) {
    for (std::size_t i = 0; i < params.peds; ++i) {
      position[i].x += params.mu_x(t, i);
      position[i].y += params.mu_y(t, i);
      out[t * params.peds + i] = position[i];
    }
  }
  return out;
}

}  // namespace rntraj
