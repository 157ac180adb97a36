#include "rntraj/global_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rntraj/error.hpp"

namespace rntraj {

namespace {

constexpr std::size_t kNodeFeatures = 3;

std::string head_name(std::size_t k, const char* part) { return "head" + std::to_string(k) + "." + part; }
std::string decode_name(std::size_t k, const char* part) { return "decode" + std::to_string(k) + "." + part; }

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in;
};

std::vector<ParamSpec> parameter_layout(const RNConfig& c, std::size_t n_active) {
  const auto d = static_cast<std::size_t>(c.hidden_dim);
  const auto l = static_cast<std::size_t>(c.latent_dim);
  const auto trip = static_cast<std::size_t>(c.trip_latent_dim());
  std::vector<ParamSpec> specs = {
      {"gcn.w_self", {kNodeFeatures, d}, kNodeFeatures},
      {"gcn.w_inner", {kNodeFeatures, d}, kNodeFeatures},
      {"gcn.w_outer", {d, d}, d},
      {"gru.w_reset", {2 * d, d}, 2 * d},
      {"gru.b_reset", {d}, 2 * d},
      {"gru.w_update", {2 * d, d}, 2 * d},
      {"gru.b_update", {d}, 2 * d},
      {"gru.w_cand", {2 * d, d}, 2 * d},
      {"gru.b_cand", {d}, 2 * d},
  };
  for (std::size_t k = 0; k < c.horizons.size(); ++k) {
    specs.push_back({head_name(k, "w"), {d, l}, d});
    specs.push_back({head_name(k, "b"), {l}, d});
  }
  specs.push_back({"attn.wq", {l, l}, l});
  specs.push_back({"attn.wk", {l, l}, l});
  specs.push_back({"attn.wv", {l, l}, l});
  specs.push_back({"attn.wo", {l, l}, l});
  specs.push_back({"ff.w1", {l, d}, l});
  specs.push_back({"ff.b1", {d}, l});
  specs.push_back({"ff.w2", {d, l}, d});
  specs.push_back({"ff.b2", {l}, d});
  specs.push_back({"latent.w", {trip, trip}, trip});
  specs.push_back({"latent.b", {trip}, trip});
  for (std::size_t k = 0; k < c.horizons.size(); ++k) {
    const auto out = static_cast<std::size_t>(c.horizons[k]) * n_active;
    specs.push_back({decode_name(k, "w"), {l, out}, l});
    specs.push_back({decode_name(k, "b"), {out}, l});
  }
  return specs;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

}  // namespace

void RNConfig::validate() const {
  if (horizons.empty()) throw std::invalid_argument("RNConfig: at least one horizon is required");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw std::invalid_argument("RNConfig: horizons must be positive");
    if (i > 0 && horizons[i] <= horizons[i - 1]) {
      throw std::invalid_argument("RNConfig: horizons must be strictly increasing");
    }
  }
  if (input_steps < 1 || hidden_dim < 1 || gcn_hops < 1 || latent_dim < 1) {
    throw std::invalid_argument("RNConfig: input_steps, hidden_dim, gcn_hops and latent_dim must be positive");
  }
}

RNGraphContext RNGraphContext::from_network(const RoadNetworkGraph& network, int hops) {
  if (hops < 1) throw std::invalid_argument("gcn hops must be >= 1");
  RNGraphContext ctx;
  ctx.n_active = network.n_active();
  if (ctx.n_active == 0) throw DataError("road network has no active nodes");
  ctx.adjacency = Tensor({ctx.n_active, ctx.n_active}, normalized_adjacency(network));
  std::vector<double> centers;
  centers.reserve(2 * ctx.n_active);
  const auto& g = network.grid;
  const double span_x = g.max_x - g.origin_x;
  const double span_y = g.max_y - g.origin_y;
  for (const auto& c : network.node_centers) {
    centers.push_back((c.x - g.origin_x) / span_x);
    centers.push_back((c.y - g.origin_y) / span_y);
  }
  ctx.centers = Tensor({ctx.n_active, 2}, std::move(centers));
  return ctx;
}

GlobalModel::GlobalModel(RNConfig config, std::size_t n_active, Rng& rng)
    : config_(std::move(config)), n_active_(n_active) {
  config_.validate();
  if (n_active_ == 0) throw std::invalid_argument("GlobalModel: n_active must be positive");
  for (auto& spec : parameter_layout(config_, n_active_)) {
    params_.add(spec.name, uniform_init(spec.shape, spec.fan_in, rng));
  }
}

GlobalModel::GlobalModel(RNConfig config, std::size_t n_active, ParameterSet params)
    : config_(std::move(config)), n_active_(n_active), params_(std::move(params)) {
  config_.validate();
  const auto layout = parameter_layout(config_, n_active_);
  if (layout.size() != params_.size()) {
    throw FormatError("global model expects " + std::to_string(layout.size()) + " parameter tensors, got " +
                      std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& e = params_.entries()[i];
    if (e.name != layout[i].name || e.value.shape() != layout[i].shape) {
      throw FormatError("global model parameter '" + e.name + "' " + shape_to_string(e.value.shape()) +
                        " does not match expected '" + layout[i].name + "' " + shape_to_string(layout[i].shape));
    }
  }
}

GlobalModel GlobalModel::clone() const { return GlobalModel(config_, n_active_, params_.clone()); }

Tensor gcn_layer(const Tensor& features, const Tensor& adjacency, const Tensor& w_self, const Tensor& w_inner,
                 const Tensor& w_outer, int hops) {
  Tensor aggregated = features;
  for (int h = 0; h < hops; ++h) aggregated = matmul(adjacency, aggregated);
  Tensor neighbor = relu(matmul(aggregated, w_inner));
  return relu(add(matmul(features, w_self), matmul(neighbor, w_outer)));
}

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruWeights& w) {
  Tensor xh = concat({x, h_prev}, -1);
  Tensor reset = sigmoid(linear(xh, w.w_reset, w.b_reset));
  Tensor update = sigmoid(linear(xh, w.w_update, w.b_update));
  Tensor candidate = tanh(linear(concat({x, mul(reset, h_prev)}, -1), w.w_cand, w.b_cand));
  return add(h_prev, mul(update, sub(candidate, h_prev)));
}

Tensor rn_node_features(std::span<const double> counts, const RNGraphContext& graph) {
  if (counts.size() != graph.n_active) throw ShapeError("occupancy row does not match road network size");
  Tensor occ({graph.n_active, 1}, std::vector<double>(counts.begin(), counts.end()));
  return concat({occ, graph.centers}, -1);
}

Tensor rn_encode(const Tensor& occupancy_window, const RNGraphContext& graph, const GlobalModel& model) {
  const auto& c = model.config();
  if (occupancy_window.rank() != 2 || occupancy_window.dim(0) != static_cast<std::size_t>(c.input_steps) ||
      occupancy_window.dim(1) != model.n_active() || graph.n_active != model.n_active()) {
    throw ShapeError("rn_forward: occupancy window " + shape_to_string(occupancy_window.shape()) +
                     " does not match input_steps=" + std::to_string(c.input_steps) +
                     ", n_active=" + std::to_string(model.n_active()) + " (network has " +
                     std::to_string(graph.n_active) + ")");
  }
  const auto& p = model.params();
  const GruWeights gru{p.get("gru.w_reset"),  p.get("gru.b_reset"), p.get("gru.w_update"),
                       p.get("gru.b_update"), p.get("gru.w_cand"),  p.get("gru.b_cand")};
  const std::size_t n = model.n_active();
  const Tensor pool = Tensor::full({1, n}, 1.0 / static_cast<double>(n));
  Tensor hidden = Tensor::zeros({1, static_cast<std::size_t>(c.hidden_dim)});
  auto rows = occupancy_window.data();
  for (std::size_t t = 0; t < static_cast<std::size_t>(c.input_steps); ++t) {
    Tensor x = rn_node_features(rows.subspan(t * n, n), graph);
    Tensor spatial = gcn_layer(x, graph.adjacency, p.get("gcn.w_self"), p.get("gcn.w_inner"), p.get("gcn.w_outer"),
                               c.gcn_hops);
    hidden = gru_cell(matmul(pool, spatial), hidden, gru);
  }
  return hidden;
}

Tensor rn_horizon_latent(const GlobalModel& model, const Tensor& encoded, std::size_t k) {
  const auto& p = model.params();
  return relu(linear(encoded, p.get(head_name(k, "w")), p.get(head_name(k, "b"))));
}

Tensor rn_trip_latent(const GlobalModel& model, std::span<const Tensor> latents) {
  const auto& c = model.config();
  if (latents.size() != c.horizons.size()) throw ShapeError("rn_trip_latent: one latent per horizon is required");
  const auto& p = model.params();
  Tensor segments = concat(latents, 0);  // (H, L)
  Tensor q = matmul(segments, p.get("attn.wq"));
  Tensor k = matmul(segments, p.get("attn.wk"));
  Tensor v = matmul(segments, p.get("attn.wv"));
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(c.latent_dim)));
  Tensor attended = add(segments, matmul(matmul(softmax_lastdim(scores), v), p.get("attn.wo")));
  Tensor ff = linear(relu(linear(attended, p.get("ff.w1"), p.get("ff.b1"))), p.get("ff.w2"), p.get("ff.b2"));
  Tensor mixed = add(attended, ff);
  Tensor flat = reshape(mixed, {1, static_cast<std::size_t>(c.trip_latent_dim())});
  return linear(flat, p.get("latent.w"), p.get("latent.b"));
}

Tensor rn_decode(const GlobalModel& model, const Tensor& trip_latent, std::size_t k) {
  const auto& c = model.config();
  const auto l = static_cast<std::size_t>(c.latent_dim);
  const auto& p = model.params();
  Tensor segment = slice(trip_latent, -1, k * l, (k + 1) * l);
  Tensor flat = linear(segment, p.get(decode_name(k, "w")), p.get(decode_name(k, "b")));
  return reshape(flat, {static_cast<std::size_t>(c.horizons[k]), model.n_active()});
}

RNForwardOutput rn_forward(const Tensor& occupancy_window, const RNGraphContext& graph, const GlobalModel& model) {
  Tensor encoded = rn_encode(occupancy_window, graph, model);
  const std::size_t heads = model.config().horizons.size();
  std::vector<Tensor> latents;
  latents.reserve(heads);
  for (std::size_t k = 0; k < heads; ++k) latents.push_back(rn_horizon_latent(model, encoded, k));
  RNForwardOutput out;
  out.trip_latent = rn_trip_latent(model, latents);
  for (std::size_t k = 0; k < heads; ++k) out.predictions.push_back(rn_decode(model, out.trip_latent, k));
  return out;
}

Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("huber_loss: shapes " + shape_to_string(pred.shape()) + " and " +
                     shape_to_string(target.shape()) + " differ");
  }
  return mean(huber(sub(pred, target), delta));
}

Tensor occupancy_window(const OccupancySeries& occupancy, int end_step, int steps) {
  if (steps < 1) throw std::invalid_argument("occupancy_window: steps must be positive");
  if (end_step > static_cast<int>(occupancy.steps)) throw std::out_of_range("occupancy_window: end beyond series");
  const std::size_t n = occupancy.nodes;
  std::vector<double> values(static_cast<std::size_t>(steps) * n, 0.0);
  for (int r = 0; r < steps; ++r) {
    const int step = end_step - steps + r;
    if (step < 0) continue;
    for (std::size_t v = 0; v < n; ++v) {
      values[static_cast<std::size_t>(r) * n + v] = occupancy.at(static_cast<std::size_t>(step), v);
    }
  }
  return Tensor({static_cast<std::size_t>(steps), n}, std::move(values));
}

std::vector<RNSample> make_rn_samples(const OccupancySeries& occupancy, const RNConfig& config, int limit_steps) {
  config.validate();
  const int limit = std::min<int>(limit_steps, static_cast<int>(occupancy.steps));
  std::vector<RNSample> samples;
  for (int end = config.input_steps; end + config.max_horizon() <= limit; ++end) {
    RNSample s;
    s.end_step = end;
    s.input = occupancy_window(occupancy, end, config.input_steps);
    for (int h : config.horizons) s.targets.push_back(occupancy_window(occupancy, end + h, h));
    samples.push_back(std::move(s));
  }
  return samples;
}

Tensor rn_sample_loss(const GlobalModel& model, const RNGraphContext& graph, const RNSample& sample, double delta) {
  RNForwardOutput out = rn_forward(sample.input, graph, model);
  Tensor total;
  for (std::size_t k = 0; k < out.predictions.size(); ++k) {
    Tensor term = huber_loss(out.predictions[k], sample.targets[k], delta);
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(out.predictions.size()));
}

FrozenGlobalModel::FrozenGlobalModel(GlobalModel model, const RoadNetworkGraph& network)
    : model_(std::move(model)), graph_(RNGraphContext::from_network(network, model_.config().gcn_hops)) {
  if (network.n_active() != model_.n_active()) {
    throw ShapeError("frozen global model expects " + std::to_string(model_.n_active()) +
                     " road network nodes, network has " + std::to_string(network.n_active()));
  }
  model_.params().set_trainable(false);
}

RNForwardOutput FrozenGlobalModel::forward(const Tensor& occupancy_window) const {
  return rn_forward(occupancy_window, graph_, model_);
}

}  // namespace rntraj
