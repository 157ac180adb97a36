#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rntraj/parameters.hpp"
#include "rntraj/roadnet.hpp"
#include "rntraj/tensor.hpp"

namespace rntraj {

struct RNConfig {
  std::vector<int> horizons{1, 4, 8};
  int input_steps = 8;
  int hidden_dim = 32;
  int gcn_hops = 1;
  int latent_dim = 16;

  /// Throws std::invalid_argument unless horizons are strictly increasing
  /// and positive and every dimension is positive.
  void validate() const;
  int trip_latent_dim() const { return latent_dim * static_cast<int>(horizons.size()); }
  int max_horizon() const { return horizons.empty() ? 0 : horizons.back(); }
  friend bool operator==(const RNConfig&, const RNConfig&) = default;
};

/// Constant graph inputs derived from a road network: the m-hop normalized
/// adjacency and node centers scaled to [0, 1] over the grid extent.
struct RNGraphContext {
  Tensor adjacency;  // (n, n)
  Tensor centers;    // (n, 2)
  std::size_t n_active = 0;

  static RNGraphContext from_network(const RoadNetworkGraph& network, int hops);
};

/// Road-network crowd model: GCN spatial encoder, GRU temporal encoder,
/// per-horizon latents mixed by one self-attention + feed-forward block,
/// a latent layer producing the trip representation, and per-horizon
/// occupancy decoders.
class GlobalModel {
 public:
  GlobalModel(RNConfig config, std::size_t n_active, Rng& rng);
  /// Adopts existing parameters (e.g. from a checkpoint); names and shapes
  /// are validated against the configuration.
  GlobalModel(RNConfig config, std::size_t n_active, ParameterSet params);

  const RNConfig& config() const noexcept { return config_; }
  std::size_t n_active() const noexcept { return n_active_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

  GlobalModel clone() const;

 private:
  RNConfig config_;
  std::size_t n_active_;
  ParameterSet params_;
};

struct RNForwardOutput {
  /// predictions[k] has shape (horizons[k], n_active).
  std::vector<Tensor> predictions;
  /// (1, trip_latent_dim)
  Tensor trip_latent;
};

/// sigma(H W_self + sigma(A^m H W_inner) W_outer) with ReLU as sigma.
Tensor gcn_layer(const Tensor& features, const Tensor& adjacency, const Tensor& w_self, const Tensor& w_inner,
                 const Tensor& w_outer, int hops = 1);

struct GruWeights {
  Tensor w_reset, b_reset;    // (in + hidden, hidden), (hidden)
  Tensor w_update, b_update;
  Tensor w_cand, b_cand;
};

/// r = sig([x,h] Wr + br), z = sig([x,h] Wz + bz), c = tanh([x, r*h] Wc + bc),
/// h' = (1 - z) * h + z * c. x and h are row vectors (1, d).
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruWeights& weights);

/// Node features for one step: (occupancy count, center x, center y).
Tensor rn_node_features(std::span<const double> counts, const RNGraphContext& graph);

/// Runs the spatial/temporal encoder over a (input_steps, n_active) occupancy
/// window and returns the final GRU state (1, hidden_dim).
Tensor rn_encode(const Tensor& occupancy_window, const RNGraphContext& graph, const GlobalModel& model);
/// Latent of horizon head `k` (index into config.horizons), shape (1, latent_dim).
Tensor rn_horizon_latent(const GlobalModel& model, const Tensor& encoded, std::size_t k);
/// Self-attention + feed-forward block and latent layer over per-horizon
/// latents given in config order; returns (1, trip_latent_dim).
Tensor rn_trip_latent(const GlobalModel& model, std::span<const Tensor> latents);
/// Occupancy prediction (horizons[k], n_active) decoded from the trip latent.
Tensor rn_decode(const GlobalModel& model, const Tensor& trip_latent, std::size_t k);

RNForwardOutput rn_forward(const Tensor& occupancy_window, const RNGraphContext& graph, const GlobalModel& model);

/// Mean elementwise Huber penalty of pred - target.
Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta = 1.0);

/// Rows [end_step - steps, end_step) of an occupancy series as a tensor;
/// rows before step 0 are zero.
Tensor occupancy_window(const OccupancySeries& occupancy, int end_step, int steps);

struct RNSample {
  int end_step = 0;  // first predicted step
  Tensor input;      // (input_steps, n_active)
  std::vector<Tensor> targets;  // (horizons[k], n_active)
};

/// Every window with `input_steps` observed rows and all horizon targets
/// inside [0, limit_steps).
std::vector<RNSample> make_rn_samples(const OccupancySeries& occupancy, const RNConfig& config, int limit_steps);

/// Mean over horizon heads of the Huber loss against `sample.targets`.
Tensor rn_sample_loss(const GlobalModel& model, const RNGraphContext& graph, const RNSample& sample, double delta);

/// Pretrained model with parameters excluded from gradient tracking, bound
/// to the road network it was trained on.
class FrozenGlobalModel {
 public:
  FrozenGlobalModel(GlobalModel model, const RoadNetworkGraph& network);

  const GlobalModel& model() const noexcept { return model_; }
  const RNGraphContext& graph() const noexcept { return graph_; }
  RNForwardOutput forward(const Tensor& occupancy_window) const;

 private:
  GlobalModel model_;
  RNGraphContext graph_;
};

}  // namespace rntraj
