#include <benchmark/benchmark.h>

#include "rntraj/global_model.hpp"
#include "rntraj/local_model.hpp"
#include "rntraj/roadnet.hpp"

namespace {

using namespace rntraj;

RoadNetworkGraph grid_network(int gr) {
  std::vector<RawRecord> rows;
  int step = 0;
  for (int row = 0; row < gr; ++row) {
    for (int col = 0; col < gr; ++col) rows.push_back({step++, 1, col + 0.5, row + 0.5});
  }
  rows.push_back({0, 2, 0.0, 0.0});
  rows.push_back({0, 3, static_cast<double>(gr), static_cast<double>(gr)});
  return build_road_network(make_scene("grid", std::move(rows)), gr);
}

SequenceWindow random_window(std::size_t peds, Rng& rng) {
  SequenceWindow w;
  w.t_obs = 8;
  w.t_pred = 12;
  for (std::size_t i = 0; i < peds; ++i) w.ped_ids.push_back(static_cast<int>(i));
  for (std::size_t t = 0; t < 20; ++t) {
    for (std::size_t i = 0; i < peds; ++i) {
      const Vec2 p{static_cast<double>(i) + 0.3 * t + rng.uniform(-0.1, 0.1), 0.2 * t + rng.uniform(-0.1, 0.1)};
      (t < 8 ? w.observed : w.target).push_back(p);
    }
  }
  return to_relative(std::move(w));
}

void BM_GlobalForward(benchmark::State& state) {
  RoadNetworkGraph net = grid_network(static_cast<int>(state.range(0)));
  RNConfig config;
  Rng rng(1);
  GlobalModel model(config, net.n_active(), rng);
  RNGraphContext graph = RNGraphContext::from_network(net, config.gcn_hops);
  Tensor window = Tensor::zeros({static_cast<std::size_t>(config.input_steps), net.n_active()});
  for (double& v : window.data_mut()) v = static_cast<double>(rng.next_u64() % 4);
  for (auto _ : state) benchmark::DoNotOptimize(rn_forward(window, graph, model));
}
BENCHMARK(BM_GlobalForward)->Arg(4)->Arg(6);

void BM_GlobalTrainingStep(benchmark::State& state) {
  RoadNetworkGraph net = grid_network(6);
  RNConfig config;
  Rng rng(2);
  GlobalModel model(config, net.n_active(), rng);
  model.params().set_trainable(true);
  RNGraphContext graph = RNGraphContext::from_network(net, config.gcn_hops);
  RNSample sample;
  sample.input = Tensor::zeros({static_cast<std::size_t>(config.input_steps), net.n_active()});
  for (int h : config.horizons) sample.targets.push_back(Tensor::zeros({static_cast<std::size_t>(h), net.n_active()}));
  for (auto _ : state) {
    GradTape tape;
    GradTape::Scope scope(tape);
    tape.backward(rn_sample_loss(model, graph, sample, 1.0));
    model.params().zero_grad();
  }
}
BENCHMARK(BM_GlobalTrainingStep);

void BM_LocalTrainingStep(benchmark::State& state) {
  const auto peds = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  LocalConfig config;
  LocalModel model(config, rng);
  model.params().set_trainable(true);
  SequenceWindow window = random_window(peds, rng);
  SocialGraph graph = build_social_graph(window.observed, window.t_obs, peds);
  Tensor trip = Tensor::zeros({1, static_cast<std::size_t>(config.trip_latent_dim)});
  for (double& v : trip.data_mut()) v = rng.uniform(0.0, 1.0);
  for (auto _ : state) {
    GradTape tape;
    GradTape::Scope scope(tape);
    tape.backward(gaussian_nll(local_forward(window, graph, &trip, model), window.target_rel));
    model.params().zero_grad();
  }
}
BENCHMARK(BM_LocalTrainingStep)->Arg(1)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
