#include "rntraj/roadnet.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "rntraj/error.hpp"
#include "rntraj/io.hpp"

namespace rntraj {

namespace {

constexpr std::string_view kRoadnetHeader = "rntraj-roadnet v1";

// Index of the interval containing v given edges edge(0..n); the last
// interval is closed on the right.
template <typename EdgeFn>
int locate_axis(double v, int n, double span_origin, double cell, EdgeFn edge) {
  int c = static_cast<int>(std::floor((v - span_origin) / cell));
  c = std::clamp(c, 0, n - 1);
  while (c > 0 && v < edge(c)) --c;
  while (c + 1 < n && v >= edge(c + 1)) ++c;
  return c;
}

std::vector<int> cell_to_node(const std::vector<bool>& mask) {
  std::vector<int> map(mask.size(), -1);
  int next = 0;
  for (std::size_t c = 0; c < mask.size(); ++c) {
    if (mask[c]) map[c] = next++;
  }
  return map;
}

void check_mask(const GridSpec& grid, const std::vector<bool>& mask) {
  if (mask.size() != grid.n_cells()) throw ShapeError("mask size does not match grid cell count");
}

}  // namespace

std::optional<CellIndex> GridSpec::locate(double x, double y) const {
  if (!(x >= origin_x && x <= max_x && y >= origin_y && y <= max_y)) return std::nullopt;
  CellIndex c;
  c.col = locate_axis(x, gr, origin_x, cell_w, [this](int i) { return edge_x(i); });
  c.row = locate_axis(y, gr, origin_y, cell_h, [this](int i) { return edge_y(i); });
  return c;
}

int OccupancySeries::row_sum(std::size_t step) const {
  int total = 0;
  for (std::size_t v = 0; v < nodes; ++v) total += at(step, v);
  return total;
}

int RoadNetworkGraph::node_of_cell(int cell) const {
  auto it = std::lower_bound(active_cells.begin(), active_cells.end(), cell);
  return (it != active_cells.end() && *it == cell) ? static_cast<int>(it - active_cells.begin()) : -1;
}

GridSpec build_grid(const Bounds& bounds, int gr) {
  if (gr < 1) throw std::invalid_argument("grid resolution must be >= 1");
  const double range_x = bounds.max_x - bounds.min_x;
  const double range_y = bounds.max_y - bounds.min_y;
  if (!(range_x > 0.0) || !(range_y > 0.0)) {
    throw DataError("degenerate scene extent: x range " + io::format_double(range_x) + ", y range " +
                    io::format_double(range_y));
  }
  GridSpec g;
  g.gr = gr;
  g.origin_x = bounds.min_x;
  g.origin_y = bounds.min_y;
  g.cell_w = range_x / gr;
  g.cell_h = range_y / gr;
  g.max_x = bounds.max_x;
  g.max_y = bounds.max_y;
  return g;
}

GridSpec build_grid(const TrajectoryScene& scene, int gr) {
  if (scene.records.empty()) throw DataError("cannot build a grid for an empty scene");
  return build_grid(scene.bounds, gr);
}

std::vector<bool> phi_mask(const TrajectoryScene& scene, const GridSpec& grid) {
  std::vector<bool> mask(grid.n_cells(), false);
  for (const auto& r : scene.records) {
    if (auto c = grid.locate(r.x, r.y)) mask[static_cast<std::size_t>(grid.cell_id(*c))] = true;
  }
  return mask;
}

OccupancySeries occupancy_series(const TrajectoryScene& scene, const GridSpec& grid, const std::vector<bool>& mask) {
  check_mask(grid, mask);
  const auto nodes = cell_to_node(mask);
  OccupancySeries occ;
  occ.steps = scene.num_steps();
  occ.nodes = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  occ.counts.assign(occ.steps * occ.nodes, 0);
  for (const auto& r : scene.records) {
    auto c = grid.locate(r.x, r.y);
    if (!c) continue;
    const int node = nodes[static_cast<std::size_t>(grid.cell_id(*c))];
    if (node < 0) continue;
    ++occ.counts[static_cast<std::size_t>(r.step) * occ.nodes + static_cast<std::size_t>(node)];
  }
  return occ;
}

std::vector<Vec2> node_centers(const TrajectoryScene& scene, const GridSpec& grid, const std::vector<bool>& mask) {
  check_mask(grid, mask);
  const auto nodes = cell_to_node(mask);
  const auto n = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  std::vector<double> sx(n, 0.0), sy(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const auto& r : scene.records) {
    auto c = grid.locate(r.x, r.y);
    if (!c) continue;
    const int node = nodes[static_cast<std::size_t>(grid.cell_id(*c))];
    if (node < 0) continue;
    const auto v = static_cast<std::size_t>(node);
    sx[v] += r.x;
    sy[v] += r.y;
    ++count[v];
  }
  std::vector<Vec2> centers(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (count[v] == 0) throw DataError("active node without any trajectory point; mask does not match scene");
    centers[v] = {sx[v] / static_cast<double>(count[v]), sy[v] / static_cast<double>(count[v])};
  }
  return centers;
}

std::vector<Edge> od_edges(const TrajectoryScene& scene, const GridSpec& grid, const std::vector<bool>& mask) {
  check_mask(grid, mask);
  const auto nodes = cell_to_node(mask);
  // Node of every record, then walk each pedestrian's consecutive steps.
  std::map<int, std::vector<std::pair<int, int>>> per_ped;  // ped -> (step, node)
  for (const auto& r : scene.records) {
    auto c = grid.locate(r.x, r.y);
    int node = c ? nodes[static_cast<std::size_t>(grid.cell_id(*c))] : -1;
    per_ped[r.ped_id].emplace_back(r.step, node);
  }
  std::map<std::pair<int, int>, long> transitions;
  for (auto& [ped, track] : per_ped) {
    std::sort(track.begin(), track.end());
    for (std::size_t k = 1; k < track.size(); ++k) {
      const auto [s0, u] = track[k - 1];
      const auto [s1, v] = track[k];
      if (s1 != s0 + 1 || u < 0 || v < 0 || u == v) continue;
      ++transitions[{u, v}];
    }
  }
  long peak = 0;
  for (const auto& [key, count] : transitions) peak = std::max(peak, count);
  std::map<std::pair<int, int>, double> weights;
  for (const auto& [key, count] : transitions) weights[key] = static_cast<double>(count) / static_cast<double>(peak);
  const int n = static_cast<int>(std::count(mask.begin(), mask.end(), true));
  for (int v = 0; v < n; ++v) weights[{v, v}] = 1.0;
  std::vector<Edge> edges;
  edges.reserve(weights.size());
  for (const auto& [key, w] : weights) edges.push_back({key.first, key.second, w});
  return edges;
}

RoadNetworkGraph build_road_network(const TrajectoryScene& scene, int gr) {
  RoadNetworkGraph net;
  net.grid = build_grid(scene, gr);
  net.node_active = phi_mask(scene, net.grid);
  for (std::size_t c = 0; c < net.node_active.size(); ++c) {
    if (net.node_active[c]) net.active_cells.push_back(static_cast<int>(c));
  }
  net.node_centers = node_centers(scene, net.grid, net.node_active);
  net.edges = od_edges(scene, net.grid, net.node_active);
  net.occupancy = occupancy_series(scene, net.grid, net.node_active);
  return net;
}

OccupancySeries occupancy_on(const RoadNetworkGraph& network, const TrajectoryScene& scene) {
  return occupancy_series(scene, network.grid, network.node_active);
}

std::vector<double> normalized_adjacency(const RoadNetworkGraph& network) {
  const std::size_t n = network.n_active();
  std::vector<double> a(n * n, 0.0);
  for (const auto& e : network.edges) {
    a[static_cast<std::size_t>(e.src) * n + static_cast<std::size_t>(e.dst)] += e.weight;
  }
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) degree[i] += a[i * n + j];
    if (!(degree[i] > 0.0)) throw DataError("road network node " + std::to_string(i) + " has zero weighted degree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= std::sqrt(degree[i] * degree[j]);
  }
  return a;
}

std::string serialize_road_network(const RoadNetworkGraph& network) {
  nlohmann::ordered_json doc;
  const auto& g = network.grid;
  doc["grid"] = {{"gr", g.gr},         {"origin_x", g.origin_x}, {"origin_y", g.origin_y}, {"cell_w", g.cell_w},
                 {"cell_h", g.cell_h}, {"max_x", g.max_x},       {"max_y", g.max_y}};
  doc["active_cells"] = network.active_cells;
  auto centers = nlohmann::ordered_json::array();
  for (const auto& c : network.node_centers) centers.push_back({c.x, c.y});
  doc["node_centers"] = std::move(centers);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : network.edges) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"weight", e.weight}});
  doc["edges"] = std::move(edges);
  return std::string(kRoadnetHeader) + "\n" + doc.dump(2) + "\n";
}

RoadNetworkGraph parse_road_network(std::string_view text) {
  const auto newline = text.find('\n');
  if (newline == std::string_view::npos || io::trim(text.substr(0, newline)) != kRoadnetHeader) {
    throw FormatError("road network file must start with '" + std::string(kRoadnetHeader) + "'");
  }
  RoadNetworkGraph net;
  try {
    const auto doc = nlohmann::json::parse(text.substr(newline + 1));
    const auto& g = doc.at("grid");
    net.grid.gr = g.at("gr").get<int>();
    net.grid.origin_x = g.at("origin_x").get<double>();
    net.grid.origin_y = g.at("origin_y").get<double>();
    net.grid.cell_w = g.at("cell_w").get<double>();
    net.grid.cell_h = g.at("cell_h").get<double>();
    net.grid.max_x = g.at("max_x").get<double>();
    net.grid.max_y = g.at("max_y").get<double>();
    net.active_cells = doc.at("active_cells").get<std::vector<int>>();
    for (const auto& c : doc.at("node_centers")) net.node_centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    for (const auto& e : doc.at("edges")) {
      net.edges.push_back({e.at("src").get<int>(), e.at("dst").get<int>(), e.at("weight").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed road network document: ") + e.what());
  }
  if (net.grid.gr < 1) throw FormatError("road network grid resolution must be positive");
  net.node_active.assign(net.grid.n_cells(), false);
  for (int c : net.active_cells) {
    if (c < 0 || static_cast<std::size_t>(c) >= net.grid.n_cells()) throw FormatError("active cell id out of range");
    net.node_active[static_cast<std::size_t>(c)] = true;
  }
  if (!std::is_sorted(net.active_cells.begin(), net.active_cells.end()) ||
      net.node_centers.size() != net.active_cells.size()) {
    throw FormatError("road network nodes are inconsistent");
  }
  const int n = static_cast<int>(net.active_cells.size());
  for (const auto& e : net.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) throw FormatError("edge endpoint is not an active node");
  }
  net.occupancy.nodes = net.active_cells.size();
  return net;
}

}  // namespace rntraj
