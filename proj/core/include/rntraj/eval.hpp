#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rntraj/dataset.hpp"
#include "rntraj/local_model.hpp"
#include "rntraj/rng.hpp"

namespace rntraj {

// Trajectories are flat spans of absolute positions indexed [t * peds + i].

double ade(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t steps, std::size_t peds);
double fde(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t steps, std::size_t peds);
/// ADE over each of `segments` contiguous, equal-length blocks of steps.
std::vector<double> segmented_ade(std::span<const Vec2> pred, std::span<const Vec2> truth, std::size_t steps,
                                  std::size_t peds, std::size_t segments = 3);

struct RunMetrics {
  double ade = 0.0;
  double fde = 0.0;
  std::vector<double> segmented_ade;
};

struct EvalResult {
  double ade = 0.0;
  double fde = 0.0;
  std::vector<double> segmented_ade;
  int runs = 0;
  std::size_t windows = 0;
  /// Population standard deviation over runs.
  double ade_std = 0.0;
  double fde_std = 0.0;
  std::vector<RunMetrics> per_run;
};

/// Produces one absolute future trajectory for `window`; `rng` is seeded
/// independently for each (run, window) pair.
using Predictor = std::function<std::vector<Vec2>(std::size_t window_index, const SequenceWindow& window, Rng& rng)>;

/// Averages window-level metrics over windows within a run, then over runs.
/// Throws DataError if there are no windows.
EvalResult evaluate_predictor(const Predictor& predictor, std::span<const SequenceWindow> windows, int runs,
                              std::uint64_t seed, std::size_t segments = 3);

/// Samples one trajectory per window from the local model's Gaussian forecast.
EvalResult evaluate_model(const LocalModel& model, std::span<const LocalSample> samples, int runs = 5,
                          std::uint64_t seed = 0);

/// Format header line, then a JSON document with the summary and per-run detail.
std::string serialize_eval(const EvalResult& result);

}  // namespace rntraj
