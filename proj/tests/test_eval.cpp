#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "model_checks.hpp"
#include "oracles.hpp"
#include "pipelines.hpp"
#include "rntraj/error.hpp"
#include "rntraj/eval.hpp"

using namespace rntraj;

namespace {

std::vector<Vec2> random_positions(std::size_t n, Rng& rng) {
  std::vector<Vec2> out(n);
  for (auto& p : out) p = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
  return out;
}

std::vector<Vec2> shifted(std::vector<Vec2> points, Vec2 by) {
  for (auto& p : points) p = {p.x + by.x, p.y + by.y};
  return points;
}

std::vector<SequenceWindow> random_windows(std::size_t count, Rng& rng) {
  std::vector<SequenceWindow> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(fixtures::random_window(1 + i % 3, rng));
  return out;
}

}  // namespace

// ---- metrics -----------------------------------------------------------

TEST(Metrics, PerfectPredictionScoresZero) {
  Rng rng(1);
  auto truth = random_positions(12 * 3, rng);
  EXPECT_EQ(ade(truth, truth, 12, 3), 0.0);
  EXPECT_EQ(fde(truth, truth, 12, 3), 0.0);
  for (double s : segmented_ade(truth, truth, 12, 3)) EXPECT_EQ(s, 0.0);
}

TEST(Metrics, ConstantOffsetOfThreeFour) {
  Rng rng(2);
  auto truth = random_positions(12, rng);
  auto pred = shifted(truth, {3.0, 4.0});
  EXPECT_NEAR(ade(pred, truth, 12, 1), 5.0, 1e-12);
  EXPECT_NEAR(fde(pred, truth, 12, 1), 5.0, 1e-12);
}

TEST(Metrics, OffsetOnlyAtFinalStep) {
  std::vector<Vec2> truth(12, Vec2{1.0, 1.0});
  auto pred = truth;
  pred.back() = {4.0, 5.0};
  EXPECT_NEAR(fde(pred, truth, 12, 1), 5.0, 1e-12);
  EXPECT_NEAR(ade(pred, truth, 12, 1), 5.0 / 12.0, 1e-12);
}

TEST(Metrics, FdeAveragesPedestrians) {
  std::vector<Vec2> truth(12 * 2, Vec2{0.0, 0.0});
  auto pred = truth;
  pred[11 * 2 + 0] = {1.0, 0.0};
  pred[11 * 2 + 1] = {0.0, -3.0};
  EXPECT_NEAR(fde(pred, truth, 12, 2), 2.0, 1e-12);
}

TEST(Metrics, MatchScalarOracleOnRandomInstances) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t steps = 1 + rng.next_u64() % 16;
    const std::size_t peds = 1 + rng.next_u64() % 6;
    auto pred = random_positions(steps * peds, rng);
    auto truth = random_positions(steps * peds, rng);
    EXPECT_NEAR(ade(pred, truth, steps, peds), oracle::scalar_ade(pred, truth, steps, peds), 1e-12);
    EXPECT_NEAR(fde(pred, truth, steps, peds), oracle::scalar_fde(pred, truth, steps, peds), 1e-12);
  }
}

TEST(Metrics, TranslationInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto pred = random_positions(12 * 2, rng);
    auto truth = random_positions(12 * 2, rng);
    const Vec2 shift{rng.uniform(-100, 100), rng.uniform(-100, 100)};
    auto pred2 = shifted(pred, shift);
    auto truth2 = shifted(truth, shift);
    EXPECT_NEAR(ade(pred, truth, 12, 2), ade(pred2, truth2, 12, 2), 1e-12);
    EXPECT_NEAR(fde(pred, truth, 12, 2), fde(pred2, truth2, 12, 2), 1e-12);
    auto a = segmented_ade(pred, truth, 12, 2);
    auto b = segmented_ade(pred2, truth2, 12, 2);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(a[s], b[s], 1e-12);
  }
}

TEST(Metrics, AnyDifferenceGivesPositiveAde) {
  Rng rng(5);
  auto truth = random_positions(12 * 2, rng);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    auto pred = truth;
    pred[k].y += 1e-9;
    EXPECT_GT(ade(pred, truth, 12, 2), 0.0);
  }
}

TEST(Metrics, ShapeMismatchesAreRejected) {
  std::vector<Vec2> a(12), b(11);
  EXPECT_THROW(ade(a, b, 12, 1), ShapeError);
  EXPECT_THROW(fde(a, a, 6, 1), ShapeError);
  EXPECT_THROW(ade({}, {}, 0, 0), ShapeError);
}

TEST(SegmentedAde, IsolatesTheLastBlock) {
  std::vector<Vec2> truth(12, Vec2{2.0, 2.0});
  auto pred = truth;
  for (std::size_t t = 8; t < 12; ++t) pred[t].y += 1.0;
  auto seg = segmented_ade(pred, truth, 12, 1);
  ASSERT_EQ(seg.size(), 3u);
  EXPECT_NEAR(seg[0], 0.0, 1e-12);
  EXPECT_NEAR(seg[1], 0.0, 1e-12);
  EXPECT_NEAR(seg[2], 1.0, 1e-12);
}

TEST(SegmentedAde, UniformErrorInEveryBlock) {
  Rng rng(6);
  auto truth = random_positions(12 * 4, rng);
  auto pred = shifted(truth, {0.6, -0.8});
  for (double s : segmented_ade(pred, truth, 12, 4)) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(SegmentedAde, MeanOfBlocksIsTheAde) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t segments = 1 + rng.next_u64() % 4;
    const std::size_t steps = segments * (1 + rng.next_u64() % 5);
    const std::size_t peds = 1 + rng.next_u64() % 5;
    auto pred = random_positions(steps * peds, rng);
    auto truth = random_positions(steps * peds, rng);
    auto seg = segmented_ade(pred, truth, steps, peds, segments);
    const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(segments);
    EXPECT_NEAR(mean, ade(pred, truth, steps, peds), 1e-12);
  }
}

TEST(SegmentedAde, IndivisibleLengthIsRejected) {
  std::vector<Vec2> a(12);
  EXPECT_THROW(segmented_ade(a, a, 12, 1, 5), std::invalid_argument);
  EXPECT_THROW(segmented_ade(a, a, 12, 1, 0), std::invalid_argument);
}

// ---- evaluation protocol -----------------------------------------------

TEST(EvaluatePredictor, DeterministicPredictorHasNoSpread) {
  Rng rng(8);
  auto windows = random_windows(5, rng);
  Predictor offset = [](std::size_t, const SequenceWindow& w, Rng&) { return shifted(w.target, {3.0, 4.0}); };
  EvalResult five = evaluate_predictor(offset, windows, 5, 1);
  EvalResult one = evaluate_predictor(offset, windows, 1, 1);
  EXPECT_EQ(five.per_run.size(), 5u);
  EXPECT_EQ(five.ade_std, 0.0);
  EXPECT_EQ(five.fde_std, 0.0);
  EXPECT_NEAR(five.ade, 5.0, 1e-12);
  EXPECT_NEAR(five.fde, 5.0, 1e-12);
  EXPECT_EQ(five.ade, one.ade);
  EXPECT_EQ(five.fde, one.fde);
  EXPECT_EQ(five.segmented_ade, one.segmented_ade);
}

TEST(EvaluatePredictor, AveragesWindowsThenRuns) {
  Rng rng(9);
  auto windows = random_windows(4, rng);
  Predictor noisy = [](std::size_t, const SequenceWindow& w, Rng& r) {
    auto out = w.target;
    for (auto& p : out) p = {p.x + r.normal(), p.y + r.normal()};
    return out;
  };
  EvalResult result = evaluate_predictor(noisy, windows, 3, 42);
  double total = 0.0;
  for (const auto& run : result.per_run) total += run.ade;
  EXPECT_NEAR(result.ade, total / 3.0, 1e-12);
  EXPECT_GT(result.ade_std, 0.0);
  EXPECT_EQ(result.windows, 4u);
  EXPECT_EQ(result.runs, 3);
  const double seg_mean = std::accumulate(result.segmented_ade.begin(), result.segmented_ade.end(), 0.0) / 3.0;
  EXPECT_NEAR(seg_mean, result.ade, 1e-12);
}

TEST(EvaluatePredictor, EveryRunAndWindowGetsItsOwnStream) {
  Rng rng(10);
  auto windows = random_windows(6, rng);
  std::set<std::uint64_t> first_draws;
  Predictor probe = [&](std::size_t, const SequenceWindow& w, Rng& r) {
    first_draws.insert(r.next_u64());
    return w.target;
  };
  evaluate_predictor(probe, windows, 5, 7);
  EXPECT_EQ(first_draws.size(), 30u);
}

TEST(EvaluatePredictor, RejectsBadArguments) {
  Rng rng(11);
  auto windows = random_windows(2, rng);
  Predictor exact = [](std::size_t, const SequenceWindow& w, Rng&) { return w.target; };
  EXPECT_THROW(evaluate_predictor(exact, {}, 5, 0), DataError);
  EXPECT_THROW(evaluate_predictor(exact, windows, 0, 0), std::invalid_argument);
}

TEST(EvaluateModel, NearDeterministicModelHasNoSpread) {
  auto windows = fixtures::linear_overfit_windows();
  auto samples = prepare_local_samples(windows, nullptr, {}, 1.0, 1e9);
  LocalModel model = fixtures::constant_step_model({0.1, 0.2});
  EvalResult five = evaluate_model(model, samples, 5, 3);
  EvalResult one = evaluate_model(model, samples, 1, 3);
  EXPECT_LT(five.ade_std, 1e-8);
  EXPECT_LT(five.fde_std, 1e-8);
  EXPECT_NEAR(five.ade, one.ade, 1e-8);

  double expected = 0.0;
  for (const auto& s : samples) {
    std::vector<Vec2> pred;
    const auto last = s.window.last_observed();
    for (std::size_t t = 0; t < s.window.t_pred; ++t) {
      for (std::size_t i = 0; i < s.window.num_peds(); ++i) {
        pred.push_back({last[i].x + 0.1 * static_cast<double>(t + 1), last[i].y + 0.2 * static_cast<double>(t + 1)});
      }
    }
    expected += oracle::scalar_ade(pred, s.window.target, s.window.t_pred, s.window.num_peds());
  }
  EXPECT_NEAR(five.ade, expected / static_cast<double>(samples.size()), 1e-8);
}

TEST(EvaluateModel, FixedSeedIsBitReproducible) {
  Rng rng(12);
  auto samples = prepare_local_samples(random_windows(4, rng), nullptr, {}, 1.0, 1e9);
  LocalConfig config;
  config.trip_latent_dim = 0;
  LocalModel model(config, rng);
  const std::string a = serialize_eval(evaluate_model(model, samples, 5, 99));
  const std::string b = serialize_eval(evaluate_model(model, samples, 5, 99));
  const std::string c = serialize_eval(evaluate_model(model, samples, 5, 100));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(EvaluateModel, EmptySetIsRejected) {
  LocalModel model = fixtures::constant_step_model({0.0, 0.0});
  EXPECT_THROW(evaluate_model(model, {}, 5, 0), DataError);
}

TEST(SerializeEval, HoldsSummaryAndPerRunDetail) {
  EvalResult r;
  r.ade = 0.5;
  r.fde = 1.25;
  r.segmented_ade = {0.25, 0.5, 0.75};
  r.runs = 2;
  r.windows = 3;
  r.per_run = {{0.5, 1.0, {0.25, 0.5, 0.75}}, {0.5, 1.5, {0.25, 0.5, 0.75}}};
  r.fde_std = 0.25;
  const std::string text = serialize_eval(r);
  EXPECT_EQ(text.rfind("rntraj-eval v1\n", 0), 0u);
  for (const char* key : {"\"ade\": 0.5", "\"fde\": 1.25", "\"fde_std\": 0.25", "\"runs\": 2", "\"windows\": 3",
                          "\"per_run\"", "\"segmented_ade\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}
