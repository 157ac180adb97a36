#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rntraj/dataset.hpp"
#include "rntraj/parameters.hpp"
#include "rntraj/rng.hpp"
#include "rntraj/tensor.hpp"

namespace rntraj {

/// Per-step pedestrian interaction kernels. Entry (i, j) of `kernel` is
/// 1 / |p_i - p_j| (0 on the diagonal, for coincident pedestrians, and beyond
/// the neighbor distance); `normalized` is D^-1/2 (K + I) D^-1/2.
struct SocialGraph {
  std::size_t steps = 0;
  std::size_t peds = 0;
  std::vector<double> kernel;      // (steps, peds, peds)
  std::vector<double> normalized;  // (steps, peds, peds)

  double kernel_at(std::size_t t, std::size_t i, std::size_t j) const { return kernel[(t * peds + i) * peds + j]; }
  double normalized_at(std::size_t t, std::size_t i, std::size_t j) const {
    return normalized[(t * peds + i) * peds + j];
  }
  /// Block-diagonal (steps*peds, steps*peds) matrix of the normalized kernels.
  Tensor block_diagonal() const;
};

/// `positions` indexed [t * peds + i].
SocialGraph build_social_graph(std::span<const Vec2> positions, std::size_t steps, std::size_t peds,
                               double neighbor_distance = std::numeric_limits<double>::infinity());

/// Bivariate Gaussian displacement forecast. `raw` holds unconstrained model
/// outputs (steps*peds, 5): mu_x, mu_y, log sigma_x, log sigma_y, atanh rho.
struct GaussianTrajectoryParams {
  Tensor raw;
  std::size_t steps = 0;
  std::size_t peds = 0;

  double mu_x(std::size_t t, std::size_t i) const { return value(t, i, 0); }
  double mu_y(std::size_t t, std::size_t i) const { return value(t, i, 1); }
  double sigma_x(std::size_t t, std::size_t i) const;
  double sigma_y(std::size_t t, std::size_t i) const;
  double rho(std::size_t t, std::size_t i) const;

  /// Builds raw outputs from moments; each span is indexed [t * peds + i].
  static GaussianTrajectoryParams from_moments(std::size_t steps, std::size_t peds, std::span<const Vec2> mu,
                                               std::span<const Vec2> sigma, std::span<const double> rho);

 private:
  double value(std::size_t t, std::size_t i, std::size_t c) const { return raw.at((t * peds + i) * 5 + c); }
};

struct LocalConfig {
  int t_obs = 8;
  int t_pred = 12;
  int hidden_dim = 16;
  /// Width of the trip feature concatenated to the spatial embedding.
  int fusion_dim = 8;
  /// Length of the trip latent the adapter accepts (0 disables fusion inputs).
  int trip_latent_dim = 48;
  int adapter_channels = 2;
  int adapter_hidden = 32;
  double alpha_init = 0.1;
  double neighbor_distance = std::numeric_limits<double>::infinity();

  void validate() const;
  friend bool operator==(const LocalConfig&, const LocalConfig&) = default;
};

/// Social-STGCNN style predictor: graph convolution over the social kernel,
/// optional trip-feature fusion, a residual temporal convolution and a
/// time-extrapolation convolution, then a 5-channel Gaussian head.
class LocalModel {
 public:
  LocalModel(LocalConfig config, Rng& rng);
  LocalModel(LocalConfig config, ParameterSet params);

  const LocalConfig& config() const noexcept { return config_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

  LocalModel clone() const;

 private:
  LocalConfig config_;
  ParameterSet params_;
};

/// Fusion adapter: 1-D convolution over the trip latent, ReLU, then linear
/// layers with ReLU. Returns (1, fusion_dim).
Tensor fusion_adapter(const LocalModel& model, const Tensor& trip_latent);

/// Forecast for every pedestrian in the window. Without a trip latent the
/// fusion channels are zero; with one they carry alpha * adapter(trip).
GaussianTrajectoryParams local_forward(const SequenceWindow& window, const SocialGraph& graph,
                                       const Tensor* trip_latent, const LocalModel& model);

/// Per-point NLL cap, -log(1e-300).
inline constexpr double kMaxPointNll = 690.77552789821368;

/// Mean negative log-likelihood of target displacements ([t * peds + i]).
Tensor gaussian_nll(const GaussianTrajectoryParams& params, std::span<const Vec2> target_rel);

/// One draw per step and pedestrian (Cholesky of the 2x2 covariance),
/// accumulated from `last_observed` into absolute positions [t * peds + i].
std::vector<Vec2> sample_trajectory(const GaussianTrajectoryParams& params, Rng& rng,
                                    std::span<const Vec2> last_observed);

/// Absolute positions following the mean displacements.
std::vector<Vec2> mean_trajectory(const GaussianTrajectoryParams& params, std::span<const Vec2> last_observed);

/// A window ready for the local model: its social graph, the frozen global
/// model's trip latent (if any) and the constant Huber term of that model.
struct LocalSample {
  SequenceWindow window;
  SocialGraph graph;
  std::optional<Tensor> trip_latent;
  double huber = 0.0;
};

}  // namespace rntraj
