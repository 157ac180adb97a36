#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rntraj/global_model.hpp"
#include "rntraj/local_model.hpp"
#include "rntraj/optim.hpp"

namespace rntraj {

struct TrainConfig {
  int rn_epochs = 50;
  int local_epochs = 250;
  double rn_lr = 1e-2;
  double rn_weight_decay = 1e-3;
  OptimizerKind local_optimizer = OptimizerKind::sgd;
  double local_lr = 1e-2;
  double local_weight_decay = 0.0;
  double lambda_huber = 1.0;
  double lambda_local = 1.0;
  double lambda_l1 = 1e-5;
  double lambda_l2 = 1e-4;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
  int batch_size = 1;
  /// Joint gradient-norm cap for local training steps; 0 disables.
  double grad_clip = 0.0;
  /// Visit training samples in a per-epoch shuffled order derived from `seed`.
  bool shuffle = true;

  void validate() const;
};

/// Loss components at one point of training. For the local phase `loss` is
/// lambda_huber*huber + lambda_local*nll + lambda_l1*l1 + lambda_l2*l2; for the
/// global phase only `huber` is used and `loss == huber`.
struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double huber = 0.0;
  double nll = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
};

/// Entry e holds the loss of the parameters at the start of epoch e,
/// evaluated over the full training set; the last entry is the final
/// parameters.
struct TrainReport {
  std::string phase;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double wall_seconds = 0.0;
};

/// Line-delimited JSON: a format header line, then one object per epoch.
/// Wall time is written only when `include_timing` is set, so that reports
/// are byte-reproducible by default.
std::string serialize_report(const TrainReport& report, bool include_timing = false);

struct PretrainResult {
  GlobalModel best;
  TrainReport report;
};

/// SGD (rn_lr, rn_weight_decay) over `samples` for rn_epochs; returns the
/// parameters with the lowest full-pass Huber loss.
PretrainResult pretrain_rn(GlobalModel model, const RNGraphContext& graph, std::span<const RNSample> samples,
                           const TrainConfig& config);

FrozenGlobalModel freeze(std::string_view checkpoint_text, const RoadNetworkGraph& network);

struct LossWeights {
  double huber = 1.0;
  double local = 1.0;
  double l1 = 1e-5;
  double l2 = 1e-4;
};

struct LossBreakdown {
  Tensor total;
  double huber = 0.0;
  double nll = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
};

/// Weighted sum of the Huber term, the local NLL and L1/L2 penalties
/// (sum |w| and sum w^2) over `params`.
LossBreakdown composite_loss(const Tensor& local_nll, const Tensor& huber, std::span<const Tensor> params,
                             const LossWeights& weights);

LossWeights loss_weights(const TrainConfig& config);

/// Social graphs, trip latents and constant Huber terms for each window.
/// `occupancy[s]` is the occupancy series (on the frozen model's network)
/// of scene s; the trip latent uses the rows ending at the window's last
/// observed step. With `global == nullptr` samples carry no trip latent.
std::vector<LocalSample> prepare_local_samples(std::span<const SequenceWindow> windows,
                                               const FrozenGlobalModel* global,
                                               std::span<const OccupancySeries> occupancy, double huber_delta,
                                               double neighbor_distance);

/// Composite loss of one batch with gradients flowing to the local model.
LossBreakdown local_batch_loss(const LocalModel& model, std::span<const LocalSample* const> batch,
                               const LossWeights& weights);

struct LocalTrainState {
  LocalModel model;
  OptimizerState optimizer;
  int epochs_done = 0;
};

struct LocalTrainResult {
  LocalTrainState state;
  TrainReport report;
};

LocalTrainState make_local_state(LocalModel model, const TrainConfig& config);

/// Trains from `state.epochs_done` up to `config.local_epochs`. Resuming a
/// saved state continues the same sample order and optimizer trajectory.
LocalTrainResult train_local(LocalTrainState state, std::span<const LocalSample> samples, const TrainConfig& config);

/// Full-pass evaluation of the composite loss without updating anything.
EpochRecord evaluate_local_loss(const LocalModel& model, std::span<const LocalSample> samples,
                                const LossWeights& weights);

}  // namespace rntraj
