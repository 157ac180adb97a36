#include "rntraj/eval.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rntraj/error.hpp"

namespace rntraj {

namespace {

void check_shapes(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t steps, std::size_t peds) {
  if (steps == 0 || peds == 0) throw ShapeError("metrics need at least one step and one pedestrian");
  if (pred.size() != steps * peds || truth.size() != steps * peds) {
    throw ShapeError("prediction and truth must both hold steps * peds positions");
  }
}

double mean_error(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t first_step,
                  std::size_t last_step, std::size_t peds) {
  double total = 0.0;
  for (std::size_t t = first_step; t < last_step; ++t) {
    for (std::size_t i = 0; i < peds; ++i) {
      const std::size_t k = t * peds + i;
      total += std::hypot(pred[k].x - truth[k].x, pred[k].y - truth[k].y);
    }
  }
  return total / static_cast<double>((last_step - first_step) * peds);
}

double population_std(const std::vector<RunMetrics>& runs, double mean, double RunMetrics::*field) {
  double acc = 0.0;
  for (const auto& r : runs) {
    const double d = r.*field - mean;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(runs.size()));
}

}  // namespace

double ade(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t steps, std::size_t peds) {
  check_shapes(pred, truth, steps, peds);
  return mean_error(pred, truth, 0, steps, peds);
}

double fde(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t steps, std::size_t peds) {
  check_shapes(pred, truth, steps, peds);
  return mean_error(pred, truth, steps - 1, steps, peds);
}

std::vector<double> segmented_ade(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t steps,
                                  std::size_t peds, std::size_t segments) {
  check_shapes(pred, truth, steps, peds);
  if (segments == 0 || steps % segments != 0) {
    throw std::invalid_argument("segmented_ade: prediction length must be divisible by the segment count");
  }
  const std::size_t len = steps / segments;
  std::vector<double> out;
  for (std::size_t s = 0; s < segments; ++s) out.push_back(mean_error(pred, truth, s * len, (s + 1) * len, peds));
  return out;
}

EvalResult evaluate_predictor(const Predictor& predictor, std::span<const SequenceWindow> windows, int runs,
                              std::uint64_t seed, std::size_t segments) {
  if (runs < 1) throw std::invalid_argument("evaluate: runs must be >= 1");
  if (windows.empty()) throw DataError("evaluate: the evaluation set is empty");
  EvalResult result;
  result.runs = runs;
  result.windows = windows.size();
  result.segmented_ade.assign(segments, 0.0);
  const double n_windows = static_cast<double>(windows.size());
  for (int r = 0; r < runs; ++r) {
    const std::uint64_t run_seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    RunMetrics run;
    run.segmented_ade.assign(segments, 0.0);
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const SequenceWindow& window = windows[w];
      Rng rng(derive_seed(run_seed, w));
      const std::vector<Vec2> pred = predictor(w, window, rng);
      const std::size_t steps = window.t_pred;
      const std::size_t peds = window.num_peds();
      run.ade += ade(pred, window.target, steps, peds);
      run.fde += fde(pred, window.target, steps, peds);
      const auto seg = segmented_ade(pred, window.target, steps, peds, segments);
      for (std::size_t s = 0; s < segments; ++s) run.segmented_ade[s] += seg[s];
    }
    run.ade /= n_windows;
    run.fde /= n_windows;
    for (auto& s : run.segmented_ade) s /= n_windows;
    result.per_run.push_back(std::move(run));
  }
  for (const auto& run : result.per_run) {
    result.ade += run.ade;
    result.fde += run.fde;
    for (std::size_t s = 0; s < segments; ++s) result.segmented_ade[s] += run.segmented_ade[s];
  }
  result.ade /= runs;
  result.fde /= runs;
  for (auto& s : result.segmented_ade) s /= runs;
  result.ade_std = population_std(result.per_run, result.ade, &RunMetrics::ade);
  result.fde_std = population_std(result.per_run, result.fde, &RunMetrics::fde);
  return result;
}

EvalResult evaluate_model(const LocalModel& model, std::span<const LocalSample> samples, int runs,
                          std::uint64_t seed) {
  std::vector<SequenceWindow> windows;
  windows.reserve(samples.size());
  for (const auto& s : samples) windows.push_back(s.window);
  Predictor predictor = [&](std::size_t index, const SequenceWindow& window, Rng& rng) {
    const LocalSample& s = samples[index];
    const Tensor* trip = s.trip_latent ? &*s.trip_latent : nullptr;
    return sample_trajectory(local_forward(window, s.graph, trip, model), rng, window.last_observed());
  };
  return evaluate_predictor(predictor, windows, runs, seed);
}

std::string serialize_eval(const EvalResult& result) {
  nlohmann::ordered_json doc;
  doc["ade"] = result.ade;
  doc["fde"] = result.fde;
  doc["segmented_ade"] = result.segmented_ade;
  doc["ade_std"] = result.ade_std;
  doc["fde_std"] = result.fde_std;
  doc["runs"] = result.runs;
  doc["windows"] = result.windows;
  auto per_run = nlohmann::ordered_json::array();
  for (const auto& r : result.per_run) {
    per_run.push_back({{"ade", r.ade}, {"fde", r.fde}, {"segmented_ade", r.segmented_ade}});
  }
  doc["per_run"] = std::move(per_run);
  return "rntraj-eval v1\n" + doc.dump(2) + "\n";
}

}  // namespace rntraj
