#include "rntraj/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rntraj/checkpoint.hpp"
#include "rntraj/error.hpp"

namespace rntraj {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Fisher-Yates with our own generator; std::shuffle's output is
// implementation-defined.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch, bool shuffle) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!shuffle) return order;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

int best_epoch_of(const std::vector<EpochRecord>& records) {
  int best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].loss < records[static_cast<std::size_t>(best)].loss) best = static_cast<int>(i);
  }
  return records.empty() ? 0 : records[static_cast<std::size_t>(best)].epoch;
}

void require_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) throw NumericError(std::string(what) + " is not finite");
}

double rn_full_pass(const GlobalModel& model, const RNGraphContext& graph, std::span<const RNSample> samples,
                    double delta) {
  double total = 0.0;
  for (const auto& s : samples) total += rn_sample_loss(model, graph, s, delta).item();
  const double loss = total / static_cast<double>(samples.size());
  require_finite(loss, "global model loss");
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (rn_epochs < 0 || local_epochs < 0) throw std::invalid_argument("epoch counts must be nonnegative");
  if (rn_lr < 0.0 || local_lr < 0.0 || rn_weight_decay < 0.0 || local_weight_decay < 0.0) {
    throw std::invalid_argument("learning rates and weight decay must be nonnegative");
  }
  if (lambda_huber < 0.0 || lambda_local < 0.0 || lambda_l1 < 0.0 || lambda_l2 < 0.0) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  if (!(huber_delta > 0.0)) throw std::invalid_argument("huber_delta must be positive");
  if (grad_clip < 0.0) throw std::invalid_argument("grad_clip must be nonnegative");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

std::string serialize_report(const TrainReport& report, bool include_timing) {
  std::string out = "rntraj-report v1\n";
  for (const auto& r : report.epochs) {
    nlohmann::ordered_json line = {{"phase", report.phase}, {"epoch", r.epoch}, {"loss", r.loss},
                                   {"huber", r.huber},      {"nll", r.nll},     {"l1", r.l1},
                                   {"l2", r.l2}};
    out += line.dump() + "\n";
  }
  nlohmann::ordered_json summary = {{"phase", report.phase}, {"best_epoch", report.best_epoch}};
  if (include_timing) summary["wall_seconds"] = report.wall_seconds;
  out += summary.dump() + "\n";
  return out;
}

PretrainResult pretrain_rn(GlobalModel model, const RNGraphContext& graph, std::span<const RNSample> samples,
                           const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw DataError("pretrain_rn: no occupancy windows cover every horizon");
  const auto start = Clock::now();
  model.params().set_trainable(true);
  model.params().zero_grad();
  std::vector<Tensor> params = model.params().tensors();
  OptimizerState optimizer;
  optimizer.kind = OptimizerKind::sgd;
  optimizer.learning_rate = config.rn_lr;
  optimizer.weight_decay = config.rn_weight_decay;

  TrainReport report;
  report.phase = "global";
  GlobalModel best = model.clone();
  double best_loss = std::numeric_limits<double>::infinity();
  auto record = [&](int epoch) {
    const double loss = rn_full_pass(model, graph, samples, config.huber_delta);
    report.epochs.push_back({epoch, loss, loss, 0.0, 0.0, 0.0});
    if (loss < best_loss) {
      best_loss = loss;
      best = model.clone();
    }
  };

  for (int epoch = 0; epoch < config.rn_epochs; ++epoch) {
    record(epoch);
    const auto order = epoch_order(samples.size(), config.seed, epoch, config.shuffle);
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(config.batch_size));
      GradTape tape;
      GradTape::Scope scope(tape);
      Tensor loss;
      for (std::size_t i = b; i < end; ++i) {
        Tensor term = rn_sample_loss(model, graph, samples[order[i]], config.huber_delta);
        loss = loss.defined() ? add(loss, term) : term;
      }
      loss = scale(loss, 1.0 / static_cast<double>(end - b));
      tape.backward(loss);
      sgd_step(params, optimizer);
    }
  }
  record(config.rn_epochs);
  report.best_epoch = best_epoch_of(report.epochs);
  report.wall_seconds = seconds_since(start);
  best.params().set_trainable(false);
  return {std::move(best), std::move(report)};
}

FrozenGlobalModel freeze(std::string_view checkpoint_text, const RoadNetworkGraph& network) {
  return FrozenGlobalModel(load_global_checkpoint(checkpoint_text), network);
}

LossWeights loss_weights(const TrainConfig& config) {
  return {config.lambda_huber, config.lambda_local, config.lambda_l1, config.lambda_l2};
}

LossBreakdown composite_loss(const Tensor& local_nll, const Tensor& huber, std::span<const Tensor> params,
                             const LossWeights& weights) {
  Tensor l1 = Tensor::scalar(0.0);
  Tensor l2 = Tensor::scalar(0.0);
  for (const auto& p : params) {
    l1 = add(l1, sum(abs(p)));
    l2 = add(l2, sum(mul(p, p)));
  }
  LossBreakdown out;
  out.huber = huber.item();
  out.nll = local_nll.item();
  out.l1 = l1.item();
  out.l2 = l2.item();
  out.total = add(add(scale(huber, weights.huber), scale(local_nll, weights.local)),
                  add(scale(l1, weights.l1), scale(l2, weights.l2)));
  return out;
}

std::vector<LocalSample> prepare_local_samples(std::span<const SequenceWindow> windows,
                                               const FrozenGlobalModel* global,
                                               std::span<const OccupancySeries> occupancy, double huber_delta,
                                               double neighbor_distance) {
  std::vector<LocalSample> samples;
  samples.reserve(windows.size());
  for (const auto& w : windows) {
    LocalSample s;
    s.window = w;
    s.graph = build_social_graph(w.observed, w.t_obs, w.num_peds(), neighbor_distance);
    if (global != nullptr) {
      if (w.scene_index >= occupancy.size()) throw std::out_of_range("no occupancy series for window's scene");
      const OccupancySeries& occ = occupancy[w.scene_index];
      const RNConfig& rc = global->model().config();
      const int end = w.start_step + static_cast<int>(w.t_obs);
      RNForwardOutput out = global->forward(occupancy_window(occ, end, rc.input_steps));
      s.trip_latent = out.trip_latent;
      double total = 0.0;
      int heads = 0;
      for (std::size_t k = 0; k < rc.horizons.size(); ++k) {
        const int h = rc.horizons[k];
        if (end + h > static_cast<int>(occ.steps)) continue;
        total += huber_loss(out.predictions[k], occupancy_window(occ, end + h, h), huber_delta).item();
        ++heads;
      }
      s.huber = heads > 0 ? total / heads : 0.0;
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

LossBreakdown local_batch_loss(const LocalModel& model, std::span<const LocalSample* const> batch,
                               const LossWeights& weights) {
  if (batch.empty()) throw DataError("local_batch_loss: empty batch");
  Tensor nll;
  double huber = 0.0;
  for (const LocalSample* s : batch) {
    const Tensor* trip = s->trip_latent ? &*s->trip_latent : nullptr;
    GaussianTrajectoryParams params = local_forward(s->window, s->graph, trip, model);
    Tensor term = gaussian_nll(params, s->window.target_rel);
    nll = nll.defined() ? add(nll, term) : term;
    huber += s->huber;
  }
  const double count = static_cast<double>(batch.size());
  nll = scale(nll, 1.0 / count);
  std::vector<Tensor> params = model.params().tensors();
  return composite_loss(nll, Tensor::scalar(huber / count), params, weights);
}

EpochRecord evaluate_local_loss(const LocalModel& model, std::span<const LocalSample> samples,
                                const LossWeights& weights) {
  if (samples.empty()) throw DataError("evaluate_local_loss: no samples");
  double nll = 0.0, huber = 0.0;
  for (const auto& s : samples) {
    const Tensor* trip = s.trip_latent ? &*s.trip_latent : nullptr;
    nll += gaussian_nll(local_forward(s.window, s.graph, trip, model), s.window.target_rel).item();
    huber += s.huber;
  }
  const double count = static_cast<double>(samples.size());
  std::vector<Tensor> params = model.params().tensors();
  LossBreakdown b = composite_loss(Tensor::scalar(nll / count), Tensor::scalar(huber / count), params, weights);
  EpochRecord r;
  r.loss = b.total.item();
  r.huber = b.huber;
  r.nll = b.nll;
  r.l1 = b.l1;
  r.l2 = b.l2;
  require_finite(r.loss, "local model loss");
  return r;
}

LocalTrainState make_local_state(LocalModel model, const TrainConfig& config) {
  OptimizerState optimizer;
  optimizer.kind = config.local_optimizer;
  optimizer.learning_rate = config.local_lr;
  optimizer.weight_decay = config.local_weight_decay;
  return {std::move(model), std::move(optimizer), 0};
}

LocalTrainResult train_local(LocalTrainState state, std::span<const LocalSample> samples, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw DataError("train_local: no training windows");
  const auto start = Clock::now();
  const LossWeights weights = loss_weights(config);
  state.model.params().set_trainable(true);
  state.model.params().zero_grad();
  std::vector<Tensor> params = state.model.params().tensors();
  state.optimizer.kind = config.local_optimizer;
  state.optimizer.learning_rate = config.local_lr;
  state.optimizer.weight_decay = config.local_weight_decay;

  TrainReport report;
  report.phase = "local";
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<const LocalSample*> batch;
  for (int epoch = state.epochs_done; epoch < config.local_epochs; ++epoch) {
    EpochRecord r = evaluate_local_loss(state.model, samples, weights);
    r.epoch = epoch;
    report.epochs.push_back(r);
    const auto order = epoch_order(samples.size(), config.seed, epoch, config.shuffle);
    for (std::size_t b = 0; b < order.size(); b += batch_size) {
      batch.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + batch_size); ++i) batch.push_back(&samples[order[i]]);
      GradTape tape;
      GradTape::Scope scope(tape);
      LossBreakdown loss = local_batch_loss(state.model, batch, weights);
      require_finite(loss.total.item(), "local model loss");
      tape.backward(loss.total);
      clip_grad_norm(params, config.grad_clip);
      optimizer_step(params, state.optimizer);
    }
    state.epochs_done = epoch + 1;
  }
  EpochRecord final_record = evaluate_local_loss(state.model, samples, weights);
  final_record.epoch = std::max(state.epochs_done, config.local_epochs);
  report.epochs.push_back(final_record);
  report.best_epoch = best_epoch_of(report.epochs);
  report.wall_seconds = seconds_since(start);
  return {std::move(state), std::move(report)};
}

}  // namespace rntraj
