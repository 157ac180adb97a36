#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "model_checks.hpp"
#include "rntraj/error.hpp"
#include "rntraj/local_model.hpp"

using namespace rntraj;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

/// Closed-form bivariate normal negative log density, written out per point.
double reference_nll(double dx, double dy, double sx, double sy, double rho) {
  const double zx = dx / sx, zy = dy / sy;
  const double one_minus = 1.0 - rho * rho;
  const double quad = (zx * zx + zy * zy - 2.0 * rho * zx * zy) / one_minus;
  const double density = std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * sx * sy * std::sqrt(one_minus));
  return -std::log(density);
}

GaussianTrajectoryParams uniform_params(std::size_t steps, std::size_t peds, Vec2 mu, Vec2 sigma, double rho) {
  const std::size_t m = steps * peds;
  std::vector<Vec2> mus(m, mu), sigmas(m, sigma);
  std::vector<double> rhos(m, rho);
  return GaussianTrajectoryParams::from_moments(steps, peds, mus, sigmas, rhos);
}

SequenceWindow permuted(const SequenceWindow& w, const std::array<std::size_t, 3>& order) {
  SequenceWindow p;
  p.t_obs = w.t_obs;
  p.t_pred = w.t_pred;
  for (std::size_t i : order) p.ped_ids.push_back(w.ped_ids[i]);
  for (std::size_t t = 0; t < w.t_obs; ++t) {
    for (std::size_t i : order) p.observed.push_back(w.obs(t, i));
  }
  for (std::size_t t = 0; t < w.t_pred; ++t) {
    for (std::size_t i : order) p.target.push_back(w.tgt(t, i));
  }
  return to_relative(std::move(p));
}

void zero_all(ParameterSet& ps) {
  for (const auto& e : ps.entries()) {
    Tensor t = e.value;
    for (double& v : t.data_mut()) v = 0.0;
  }
}

}  // namespace

TEST(SocialGraph, TwoPedestriansTwoMetersApart) {
  std::vector<Vec2> pos{{0.0, 0.0}, {2.0, 0.0}};
  SocialGraph g = build_social_graph(pos, 1, 2);
  EXPECT_DOUBLE_EQ(g.kernel_at(0, 0, 1), 0.5);
  EXPECT_DOUBLE_EQ(g.kernel_at(0, 1, 0), 0.5);
  EXPECT_EQ(g.kernel_at(0, 0, 0), 0.0);
  // Degrees 1.5 on both nodes.
  EXPECT_NEAR(g.normalized_at(0, 0, 1), 0.5 / 1.5, 1e-15);
  EXPECT_NEAR(g.normalized_at(0, 0, 0), 1.0 / 1.5, 1e-15);
}

TEST(SocialGraph, CoincidentPedestriansHaveNoEdge) {
  std::vector<Vec2> pos{{1.0, 1.0}, {1.0, 1.0}};
  SocialGraph g = build_social_graph(pos, 1, 2);
  EXPECT_EQ(g.kernel_at(0, 0, 1), 0.0);
  EXPECT_EQ(g.normalized_at(0, 0, 1), 0.0);
  EXPECT_EQ(g.normalized_at(0, 0, 0), 1.0);
}

TEST(SocialGraph, SinglePedestrianIsIdentity) {
  std::vector<Vec2> pos{{3.0, 4.0}};
  SocialGraph g = build_social_graph(pos, 1, 1);
  EXPECT_EQ(g.normalized_at(0, 0, 0), 1.0);
}

TEST(SocialGraph, SymmetricNonnegativeAndMatchesNormalization) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    SequenceWindow w = fixtures::random_window(5, rng);
    SocialGraph g = build_social_graph(w.observed, w.t_obs, 5);
    for (std::size_t t = 0; t < w.t_obs; ++t) {
      std::vector<double> degree(5, 1.0);
      for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) degree[i] += g.kernel_at(t, i, j);
      }
      for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(g.kernel_at(t, i, i), 0.0);
        for (std::size_t j = 0; j < 5; ++j) {
          EXPECT_EQ(g.kernel_at(t, i, j), g.kernel_at(t, j, i));
          EXPECT_GE(g.kernel_at(t, i, j), 0.0);
          EXPECT_TRUE(std::isfinite(g.kernel_at(t, i, j)));
          if (i != j) {
            const Vec2 a = w.obs(t, i), b = w.obs(t, j);
            EXPECT_NEAR(g.kernel_at(t, i, j), 1.0 / std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)),
                        1e-12);
          }
          const double a = g.kernel_at(t, i, j) + (i == j ? 1.0 : 0.0);
          EXPECT_NEAR(g.normalized_at(t, i, j), a / std::sqrt(degree[i] * degree[j]), 1e-14);
        }
      }
    }
  }
}

TEST(SocialGraph, NeighborDistanceCutoff) {
  std::vector<Vec2> pos{{0.0, 0.0}, {1.0, 0.0}, {5.0, 0.0}};
  SocialGraph g = build_social_graph(pos, 1, 3, 2.0);
  EXPECT_EQ(g.kernel_at(0, 0, 1), 1.0);
  EXPECT_EQ(g.kernel_at(0, 0, 2), 0.0);
  EXPECT_EQ(g.kernel_at(0, 1, 2), 0.0);
  EXPECT_THROW(build_social_graph(pos, 2, 3), ShapeError);
}

TEST(LocalForward, OutputShapeForThreePedestrians) {
  Rng rng(2);
  LocalModel model(LocalConfig{}, rng);
  SequenceWindow w = fixtures::random_window(3, rng);
  SocialGraph g = build_social_graph(w.observed, 8, 3);
  Tensor trip = fixtures::random_tensor({1, 48}, rng);
  GaussianTrajectoryParams out = local_forward(w, g, &trip, model);
  EXPECT_EQ(out.steps, 12u);
  EXPECT_EQ(out.peds, 3u);
  EXPECT_EQ(out.raw.shape(), (Shape{36, 5}));
}

TEST(LocalForward, ZeroParametersGiveStandardGaussian) {
  Rng rng(3);
  LocalModel model(LocalConfig{}, rng);
  zero_all(model.params());
  SequenceWindow w = fixtures::random_window(4, rng);
  SocialGraph g = build_social_graph(w.observed, 8, 4);
  Tensor trip = fixtures::random_tensor({1, 48}, rng);
  GaussianTrajectoryParams out = local_forward(w, g, &trip, model);
  for (std::size_t t = 0; t < 12; ++t) {
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(out.mu_x(t, i), 0.0);
      EXPECT_EQ(out.mu_y(t, i), 0.0);
      EXPECT_EQ(out.sigma_x(t, i), 1.0);
      EXPECT_EQ(out.sigma_y(t, i), 1.0);
      EXPECT_EQ(out.rho(t, i), 0.0);
    }
  }
}

TEST(LocalForward, ZeroAlphaFusionIsBitwiseNoOp) {
  Rng rng(4);
  LocalConfig config;
  config.alpha_init = 0.0;
  LocalModel model(config, rng);
  for (int trial = 0; trial < 10; ++trial) {
    SequenceWindow w = fixtures::random_window(1 + static_cast<std::size_t>(trial % 4), rng);
    SocialGraph g = build_social_graph(w.observed, 8, w.num_peds());
    Tensor trip = fixtures::random_tensor({1, 48}, rng, 0.0, 5.0);
    EXPECT_EQ(values(local_forward(w, g, &trip, model).raw), values(local_forward(w, g, nullptr, model).raw));
  }
}

TEST(LocalForward, NonzeroAlphaChangesOutput) {
  Rng rng(5);
  LocalModel model(LocalConfig{}, rng);
  SequenceWindow w = fixtures::random_window(2, rng);
  SocialGraph g = build_social_graph(w.observed, 8, 2);
  Tensor trip = fixtures::random_tensor({1, 48}, rng, 0.0, 5.0);
  EXPECT_NE(values(local_forward(w, g, &trip, model).raw), values(local_forward(w, g, nullptr, model).raw));
}

TEST(LocalForward, PermutationEquivariance) {
  Rng rng(6);
  LocalModel model(LocalConfig{}, rng);
  SequenceWindow w = fixtures::random_window(3, rng);
  Tensor trip = fixtures::random_tensor({1, 48}, rng, 0.0, 2.0);
  GaussianTrajectoryParams base = local_forward(w, build_social_graph(w.observed, 8, 3), &trip, model);
  std::array<std::size_t, 3> order{0, 1, 2};
  int count = 0;
  do {
    SequenceWindow p = permuted(w, order);
    GaussianTrajectoryParams out = local_forward(p, build_social_graph(p.observed, 8, 3), &trip, model);
    for (std::size_t t = 0; t < 12; ++t) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t c = 0; c < 5; ++c) {
          EXPECT_NEAR(out.raw.at((t * 3 + i) * 5 + c), base.raw.at((t * 3 + order[i]) * 5 + c), 1e-10);
        }
      }
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  EXPECT_EQ(count, 6);
}

TEST(LocalForward, CovarianceAlwaysPositiveDefinite) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    LocalModel model(LocalConfig{}, rng);
    SequenceWindow w = fixtures::random_window(3, rng);
    Tensor trip = fixtures::random_tensor({1, 48}, rng);
    GaussianTrajectoryParams out = local_forward(w, build_social_graph(w.observed, 8, 3), &trip, model);
    for (std::size_t t = 0; t < 12; ++t) {
      for (std::size_t i = 0; i < 3; ++i) {
        const double r = out.rho(t, i);
        EXPECT_GT(out.sigma_x(t, i) * out.sigma_y(t, i) * (1.0 - r * r), 0.0);
      }
    }
  }
}

TEST(LocalForward, DimensionMismatchRaises) {
  Rng rng(8);
  LocalModel model(LocalConfig{}, rng);
  SequenceWindow w = fixtures::random_window(3, rng);
  SocialGraph wrong = build_social_graph(std::vector<Vec2>(16), 8, 2);
  EXPECT_THROW(local_forward(w, wrong, nullptr, model), ShapeError);
  SequenceWindow short_window = fixtures::random_window(3, rng, 6, 12);
  EXPECT_THROW(local_forward(short_window, build_social_graph(short_window.observed, 6, 3), nullptr, model),
               ShapeError);
  Tensor bad_trip = Tensor::zeros({1, 47});
  EXPECT_THROW(local_forward(w, build_social_graph(w.observed, 8, 3), &bad_trip, model), ShapeError);
  LocalConfig plain;
  plain.trip_latent_dim = 0;
  LocalModel no_fusion(plain, rng);
  Tensor trip = Tensor::zeros({1, 48});
  EXPECT_THROW(local_forward(w, build_social_graph(w.observed, 8, 3), &trip, no_fusion), std::logic_error);
  EXPECT_NO_THROW(local_forward(w, build_social_graph(w.observed, 8, 3), nullptr, no_fusion));
}

TEST(LocalForward, PipelineGradientCheck) {
  Rng rng(9);
  EXPECT_LE(fixtures::local_pipeline_gradient_error(rng, 3, true), 1e-5);
  EXPECT_LE(fixtures::local_pipeline_gradient_error(rng, 3, false), 1e-5);
  EXPECT_LE(fixtures::local_pipeline_gradient_error(rng, 1, true), 1e-5);
}

TEST(FusionAdapter, ShapeAndNonnegativity) {
  Rng rng(10);
  LocalModel model(LocalConfig{}, rng);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor out = fusion_adapter(model, fixtures::random_tensor({1, 48}, rng));
    EXPECT_EQ(out.shape(), (Shape{1, 8}));
    for (double v : out.data()) EXPECT_GE(v, 0.0);
  }
  EXPECT_EQ(model.params().get("fusion.alpha").item(), 0.1);
}

TEST(Nll, DensityAtMeanUncorrelated) {
  GaussianTrajectoryParams p = uniform_params(12, 2, {0.3, -0.2}, {1.0, 1.0}, 0.0);
  std::vector<Vec2> target(24, Vec2{0.3, -0.2});
  EXPECT_NEAR(gaussian_nll(p, target).item(), std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(gaussian_nll(p, target).item(), 1.837877, 1e-6);
}

TEST(Nll, DensityAtMeanCorrelated) {
  GaussianTrajectoryParams p = uniform_params(12, 1, {0.0, 0.0}, {1.0, 1.0}, 0.5);
  std::vector<Vec2> target(12, Vec2{0.0, 0.0});
  EXPECT_NEAR(gaussian_nll(p, target).item(), std::log(2.0 * std::numbers::pi * std::sqrt(0.75)), 1e-12);
  EXPECT_NEAR(gaussian_nll(p, target).item(), 1.694036, 1e-6);
}

TEST(Nll, ShrinkingSigmaOffMeanIncreases) {
  std::vector<Vec2> target(1, Vec2{0.5, -0.5});
  // Below sigma = 0.5 the residual term dominates the log-scale term.
  double previous = -1e300;
  for (double s = 0.45; s > 1e-3; s *= 0.7) {
    const double nll = gaussian_nll(uniform_params(1, 1, {0, 0}, {s, s}, 0.0), target).item();
    if (previous < kMaxPointNll) {
      EXPECT_GT(nll, previous);
    } else {
      EXPECT_EQ(nll, kMaxPointNll);
    }
    previous = nll;
  }
  EXPECT_EQ(previous, kMaxPointNll);
}

TEST(Nll, MatchesClosedFormOnRandomParams) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const double mx = rng.uniform(-1, 1), my = rng.uniform(-1, 1);
    const double sx = rng.uniform(0.2, 2.0), sy = rng.uniform(0.2, 2.0), r = rng.uniform(-0.95, 0.95);
    const double tx = rng.uniform(-2, 2), ty = rng.uniform(-2, 2);
    std::vector<Vec2> target{{tx, ty}};
    const double got = gaussian_nll(uniform_params(1, 1, {mx, my}, {sx, sy}, r), target).item();
    EXPECT_NEAR(got, reference_nll(tx - mx, ty - my, sx, sy, r), 1e-10);
  }
}

TEST(Nll, CappedWhenDensityUnderflows) {
  std::vector<Vec2> target(1, Vec2{1000.0, 0.0});
  const double nll = gaussian_nll(uniform_params(1, 1, {0, 0}, {1e-3, 1e-3}, 0.0), target).item();
  EXPECT_EQ(nll, kMaxPointNll);
}

TEST(Nll, FiniteWhenCorrelationSaturates) {
  Tensor raw({1, 5}, {0.0, 0.0, 0.0, 0.0, 40.0});
  GaussianTrajectoryParams p{raw, 1, 1};
  std::vector<Vec2> target{{0.1, 0.1}};
  EXPECT_TRUE(std::isfinite(gaussian_nll(p, target).item()));
}

TEST(Nll, GradientCheckOnRandomValidParams) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor raw = fixtures::random_tensor({6, 5}, rng, -1.0, 1.0);
    std::vector<Vec2> target(6);
    for (auto& v : target) v = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double err = finite_difference_check(
        [&](const Tensor& x) { return gaussian_nll(GaussianTrajectoryParams{x, 3, 2}, target); }, raw);
    EXPECT_LE(err, 1e-5);
  }
}

TEST(Nll, ShapeMismatchRaises) {
  std::vector<Vec2> target(5);
  EXPECT_THROW(gaussian_nll(uniform_params(2, 3, {0, 0}, {1, 1}, 0), target), ShapeError);
}

TEST(Sampling, VanishingVarianceFollowsMean) {
  Rng rng(13);
  GaussianTrajectoryParams p = uniform_params(12, 2, {0.4, -0.1}, {1e-9, 1e-9}, 0.3);
  std::vector<Vec2> last{{1.0, 2.0}, {-3.0, 0.5}};
  auto sample = sample_trajectory(p, rng, last);
  auto mean = mean_trajectory(p, last);
  for (std::size_t k = 0; k < sample.size(); ++k) {
    EXPECT_LT(std::abs(sample[k].x - mean[k].x), 1e-6);
    EXPECT_LT(std::abs(sample[k].y - mean[k].y), 1e-6);
  }
  EXPECT_NEAR(mean[23].x, -3.0 + 12 * 0.4, 1e-12);
  EXPECT_NEAR(mean[0].y, 2.0 - 0.1, 1e-12);
}

namespace {

double empirical_correlation(double rho, std::uint64_t seed) {
  const std::size_t peds = 1000, steps = 100;
  GaussianTrajectoryParams p = uniform_params(steps, peds, {0, 0}, {1, 1}, rho);
  Rng rng(seed);
  std::vector<Vec2> origin(peds);
  auto sample = sample_trajectory(p, rng, origin);
  double sxx = 0, syy = 0, sxy = 0, mx = 0, my = 0;
  std::vector<Vec2> steps_taken;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < peds; ++i) {
      const Vec2 prev = t == 0 ? origin[i] : sample[(t - 1) * peds + i];
      const Vec2 cur = sample[t * peds + i];
      steps_taken.push_back({cur.x - prev.x, cur.y - prev.y});
    }
  }
  for (const auto& d : steps_taken) {
    mx += d.x;
    my += d.y;
  }
  mx /= static_cast<double>(steps_taken.size());
  my /= static_cast<double>(steps_taken.size());
  for (const auto& d : steps_taken) {
    sxx += (d.x - mx) * (d.x - mx);
    syy += (d.y - my) * (d.y - my);
    sxy += (d.x - mx) * (d.y - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(Sampling, UncorrelatedDrawsHaveNearZeroCorrelation) {
  const double r = empirical_correlation(0.0, 14);
  EXPECT_GT(r, -0.01);
  EXPECT_LT(r, 0.01);
}

TEST(Sampling, CorrelationIsReproduced) { EXPECT_NEAR(empirical_correlation(0.8, 15), 0.8, 0.01); }

TEST(Sampling, FixedSeedIsDeterministic) {
  GaussianTrajectoryParams p = uniform_params(12, 3, {0.1, 0.2}, {0.5, 0.7}, -0.4);
  std::vector<Vec2> last(3);
  Rng a(16), b(16);
  auto first = sample_trajectory(p, a, last);
  auto second = sample_trajectory(p, b, last);
  EXPECT_EQ(first, second);
  std::vector<Vec2> wrong(2);
  EXPECT_THROW(sample_trajectory(p, a, wrong), ShapeError);
}

TEST(Params, MomentsRoundTrip) {
  GaussianTrajectoryParams p = uniform_params(2, 2, {0.1, -0.3}, {0.5, 2.0}, -0.25);
  EXPECT_DOUBLE_EQ(p.mu_y(1, 1), -0.3);
  EXPECT_DOUBLE_EQ(p.sigma_x(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(p.sigma_y(1, 0), 2.0);
  EXPECT_NEAR(p.rho(0, 0), -0.25, 1e-15);
  std::vector<Vec2> mu(1), sigma{{0.0, 1.0}};
  std::vector<double> rho{0.0};
  EXPECT_THROW(GaussianTrajectoryParams::from_moments(1, 1, mu, sigma, rho), std::invalid_argument);
}

TEST(Model, LayoutValidationAndClone) {
  Rng rng(17);
  LocalModel model(LocalConfig{}, rng);
  EXPECT_TRUE(model.clone().params().identical_to(model.params()));
  LocalConfig other;
  other.hidden_dim = 12;
  EXPECT_THROW(LocalModel(other, model.params().clone()), FormatError);
  LocalConfig bad;
  bad.hidden_dim = 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = LocalConfig{};
  bad.neighbor_distance = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
