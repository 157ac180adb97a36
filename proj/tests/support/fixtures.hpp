#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rntraj/dataset.hpp"
#include "rntraj/global_model.hpp"
#include "rntraj/local_model.hpp"
#include "rntraj/rng.hpp"
#include "rntraj/roadnet.hpp"
#include "rntraj/tensor.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(RNTRAJ_TEST_DATA_DIR) + "/" + name; }

inline rntraj::TrajectoryScene sample_scene() {
  return rntraj::parse_trajectory_file(data_path("eth_sample.txt"), rntraj::ColumnOrder::frame_ped_x_y);
}

inline rntraj::Tensor random_tensor(rntraj::Shape shape, rntraj::Rng& rng, double lo = -2.0, double hi = 2.0) {
  rntraj::Tensor t = rntraj::Tensor::zeros(std::move(shape));
  for (double& v : t.data_mut()) v = rng.uniform(lo, hi);
  return t;
}

/// Random walkers in a box: each pedestrian appears for a contiguous run of
/// steps (occasionally with a gap), moving with noisy constant velocity.
inline rntraj::TrajectoryScene random_scene(rntraj::Rng& rng, int max_peds = 8, int steps = 40) {
  std::vector<rntraj::RawRecord> rows;
  const int peds = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_peds));
  const double width = rng.uniform(2.0, 20.0);
  const double height = rng.uniform(2.0, 20.0);
  for (int p = 0; p < peds; ++p) {
    const int start = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(steps));
    const int length = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(steps));
    const int gap_at = rng.uniform() < 0.2 ? start + length / 2 : -1;
    double x = rng.uniform(0.0, width), y = rng.uniform(0.0, height);
    const double vx = rng.uniform(-0.5, 0.5), vy = rng.uniform(-0.5, 0.5);
    for (int t = start; t < std::min(steps, start + length); ++t) {
      x = std::clamp(x + vx + 0.05 * rng.normal(), 0.0, width);
      y = std::clamp(y + vy + 0.05 * rng.normal(), 0.0, height);
      if (t == gap_at) continue;
      rows.push_back({static_cast<std::int64_t>(t) * 10, p + 1, x, y});
    }
  }
  // Anchor points pin the scene extent and keep every raw frame annotated.
  for (int t = 0; t < steps; ++t) rows.push_back({static_cast<std::int64_t>(t) * 10, 1000, 0.0, 0.0});
  rows.push_back({0, 1001, width, height});
  return rntraj::make_scene("random", std::move(rows));
}

/// Pedestrians moving at constant velocity for `steps` steps.
inline rntraj::TrajectoryScene linear_scene(const std::vector<std::pair<rntraj::Vec2, rntraj::Vec2>>& starts_and_velocities,
                                            int steps) {
  std::vector<rntraj::RawRecord> rows;
  for (std::size_t p = 0; p < starts_and_velocities.size(); ++p) {
    const auto& [start, vel] = starts_and_velocities[p];
    for (int t = 0; t < steps; ++t) {
      rows.push_back({t, static_cast<int>(p) + 1, start.x + vel.x * t, start.y + vel.y * t});
    }
  }
  return rntraj::make_scene("linear", std::move(rows));
}

/// A pedestrian circling the four cells of a 2x2 grid; 4 active nodes.
inline rntraj::RoadNetworkGraph four_node_network() {
  std::vector<rntraj::RawRecord> rows;
  const double pts[4][2] = {{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}};
  for (int t = 0; t < 12; ++t) rows.push_back({t, 1, pts[t % 4][0], pts[t % 4][1]});
  rows.push_back({0, 2, 0.0, 0.0});
  rows.push_back({0, 3, 2.0, 2.0});
  return rntraj::build_road_network(rntraj::make_scene("four", std::move(rows)), 2);
}

inline rntraj::OccupancySeries occupancy_pattern(std::size_t steps, std::size_t nodes, int (*count)(std::size_t t,
                                                                                                      std::size_t v)) {
  rntraj::OccupancySeries occ;
  occ.steps = steps;
  occ.nodes = nodes;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t v = 0; v < nodes; ++v) occ.counts.push_back(count(t, v));
  }
  return occ;
}

}  // namespace fixtures
