#include <benchmark/benchmark.h>

#include "rntraj/eval.hpp"
#include "rntraj/rng.hpp"
#include "rntraj/roadnet.hpp"
#include "rntraj/tensor.hpp"

namespace {

using namespace rntraj;

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, bool grad = false) {
  Tensor t = Tensor::zeros({rows, cols}, grad);
  for (double& v : t.data_mut()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = random_matrix(n, n, rng);
  Tensor b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Tensor a = random_matrix(n, n, rng, true);
  Tensor b = random_matrix(n, n, rng, true);
  for (auto _ : state) {
    GradTape tape;
    GradTape::Scope scope(tape);
    Tensor loss = sum(tanh(matmul(a, b)));
    tape.backward(loss);
    a.zero_grad();
    b.zero_grad();
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(64);

TrajectoryScene walkers(int peds, int steps) {
  Rng rng(3);
  std::vector<RawRecord> rows;
  for (int p = 0; p < peds; ++p) {
    double x = rng.uniform(0.0, 20.0), y = rng.uniform(0.0, 20.0);
    for (int t = 0; t < steps; ++t) {
      x += rng.uniform(-0.5, 0.5);
      y += rng.uniform(-0.5, 0.5);
      rows.push_back({t, p + 1, x, y});
    }
  }
  return make_scene("bench", std::move(rows));
}

void BM_BuildRoadNetwork(benchmark::State& state) {
  TrajectoryScene scene = walkers(static_cast<int>(state.range(0)), 500);
  for (auto _ : state) benchmark::DoNotOptimize(build_road_network(scene, 6));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scene.records.size()));
}
BENCHMARK(BM_BuildRoadNetwork)->Arg(10)->Arg(100);

void BM_Ade(benchmark::State& state) {
  const std::size_t peds = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<Vec2> pred(12 * peds), truth(12 * peds);
  for (auto& p : pred) p = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
  for (auto& p : truth) p = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
  for (auto _ : state) benchmark::DoNotOptimize(ade(pred, truth, 12, peds));
}
BENCHMARK(BM_Ade)->Arg(1)->Arg(32);

}  // namespace
