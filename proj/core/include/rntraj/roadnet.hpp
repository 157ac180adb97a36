#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rntraj/dataset.hpp"

namespace rntraj {

struct CellIndex {
  int col = 0;
  int row = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform grid of gr x gr cells over a rectangular region. Cell c along x
/// covers [edge_x(c), edge_x(c+1)); the last cell is closed at the upper
/// bound so the region's maximum still falls inside.
struct GridSpec {
  int gr = 6;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_w = 1.0;
  double cell_h = 1.0;
  double max_x = 0.0;
  double max_y = 0.0;

  std::size_t n_cells() const noexcept { return static_cast<std::size_t>(gr) * static_cast<std::size_t>(gr); }
  int cell_id(CellIndex c) const noexcept { return c.row * gr + c.col; }
  double edge_x(int c) const noexcept { return c >= gr ? max_x : origin_x + c * cell_w; }
  double edge_y(int c) const noexcept { return c >= gr ? max_y : origin_y + c * cell_h; }

  /// Cell containing (x, y), or nullopt outside [origin, max] on either axis.
  std::optional<CellIndex> locate(double x, double y) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Per-step pedestrian counts on the active nodes, row-major (step, node).
struct OccupancySeries {
  std::size_t steps = 0;
  std::size_t nodes = 0;
  std::vector<int> counts;

  int at(std::size_t step, std::size_t node) const { return counts[step * nodes + node]; }
  int row_sum(std::size_t step) const;
};

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct RoadNetworkGraph {
  GridSpec grid;
  /// Per cell: true when some trajectory point fell inside it.
  std::vector<bool> node_active;
  /// Node index -> cell id, ascending.
  std::vector<int> active_cells;
  std::vector<Vec2> node_centers;
  /// Directed edges sorted by (src, dst), including a unit self-loop per node.
  std::vector<Edge> edges;
  /// Occupancy of the scene the network was built from. Not serialized.
  OccupancySeries occupancy;

  std::size_t n_active() const noexcept { return active_cells.size(); }
  /// Node index of a cell, or -1 when the cell is inactive.
  int node_of_cell(int cell) const;
};

/// gr cells per axis spanning the scene bounds. Throws DataError when either
/// axis has zero extent.
GridSpec build_grid(const Bounds& bounds, int gr);
GridSpec build_grid(const TrajectoryScene& scene, int gr);

std::vector<bool> phi_mask(const TrajectoryScene& scene, const GridSpec& grid);

/// Counts per step on active cells. Points outside the grid or on inactive
/// cells are not counted.
OccupancySeries occupancy_series(const TrajectoryScene& scene, const GridSpec& grid, const std::vector<bool>& mask);

/// Centroid of the trajectory points in each active cell.
std::vector<Vec2> node_centers(const TrajectoryScene& scene, const GridSpec& grid, const std::vector<bool>& mask);

/// Origin-destination edges between active nodes from step-to-step cell
/// changes of each pedestrian, weighted by transition count / max count, plus
/// weight-1 self-loops.
std::vector<Edge> od_edges(const TrajectoryScene& scene, const GridSpec& grid, const std::vector<bool>& mask);

RoadNetworkGraph build_road_network(const TrajectoryScene& scene, int gr);

/// Occupancy of any scene (e.g. held-out steps) on an existing network.
OccupancySeries occupancy_on(const RoadNetworkGraph& network, const TrajectoryScene& scene);

/// Dense (n_active x n_active) matrix with entry (i, j) = e_ij / sqrt(d_i d_j),
/// d_i the weighted out-degree. Throws DataError on a zero-degree node.
std::vector<double> normalized_adjacency(const RoadNetworkGraph& network);

std::string serialize_road_network(const RoadNetworkGraph& network);
/// Throws FormatError on a bad header or document. Occupancy is left empty.
RoadNetworkGraph parse_road_network(std::string_view text);

}  // namespace rntraj
