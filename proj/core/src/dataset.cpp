#include "rntraj/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>

#include "rntraj/error.hpp"
#include "rntraj/io.hpp"

namespace rntraj {

ColumnOrder column_order_from_string(std::string_view name) {
  if (name == "frame_ped_x_y") return ColumnOrder::frame_ped_x_y;
  if (name == "frame_ped_y_x") return ColumnOrder::frame_ped_y_x;
  throw std::invalid_argument("unknown column order '" + std::string(name) +
                              "' (expected frame_ped_x_y or frame_ped_y_x)");
}

std::string_view to_string(ColumnOrder order) {
  return order == ColumnOrder::frame_ped_x_y ? "frame_ped_x_y" : "frame_ped_y_x";
}

namespace {

Bounds compute_bounds(const std::vector<TrajectoryRecord>& records) {
  Bounds b{records.front().x, records.front().x, records.front().y, records.front().y};
  for (const auto& r : records) {
    b.min_x = std::min(b.min_x, r.x);
    b.max_x = std::max(b.max_x, r.x);
    b.min_y = std::min(b.min_y, r.y);
    b.max_y = std::max(b.max_y, r.y);
  }
  return b;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    pos = line.find_first_not_of(" \t\r", pos);
    if (pos == std::string_view::npos) break;
    auto end = line.find_first_of(" \t\r", pos);
    if (end == std::string_view::npos) end = line.size();
    fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

// Position lookup for one step, sorted by ped id.
using StepIndex = std::vector<std::vector<const TrajectoryRecord*>>;

StepIndex index_by_step(const TrajectoryScene& scene) {
  StepIndex by_step(scene.num_steps());
  for (const auto& r : scene.records) by_step[static_cast<std::size_t>(r.step)].push_back(&r);
  return by_step;
}

const TrajectoryRecord* find_ped(const std::vector<const TrajectoryRecord*>& step, int ped) {
  auto it = std::lower_bound(step.begin(), step.end(), ped,
                             [](const TrajectoryRecord* r, int id) { return r->ped_id < id; });
  return (it != step.end() && (*it)->ped_id == ped) ? *it : nullptr;
}

}  // namespace

TrajectoryScene make_scene(std::string scene_id, std::vector<RawRecord> rows) {
  if (rows.empty()) throw DataError("scene '" + scene_id + "' has no records");
  std::sort(rows.begin(), rows.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.ped_id < b.ped_id;
  });
  TrajectoryScene scene;
  scene.scene_id = std::move(scene_id);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i > 0 && rows[i - 1].frame == r.frame && rows[i - 1].ped_id == r.ped_id) {
      throw DataError("duplicate record for frame " + std::to_string(r.frame) + ", pedestrian " +
                      std::to_string(r.ped_id));
    }
    if (!std::isfinite(r.x) || !std::isfinite(r.y)) throw DataError("non-finite coordinate in scene");
    if (scene.raw_frames.empty() || scene.raw_frames.back() != r.frame) scene.raw_frames.push_back(r.frame);
    scene.records.push_back({static_cast<int>(scene.raw_frames.size() - 1), r.ped_id, r.x, r.y});
  }
  scene.bounds = compute_bounds(scene.records);
  scene.frame_stride = 1;
  if (scene.raw_frames.size() > 1) {
    std::int64_t gap = scene.raw_frames[1] - scene.raw_frames[0];
    for (std::size_t i = 2; i < scene.raw_frames.size(); ++i) {
      gap = std::min(gap, scene.raw_frames[i] - scene.raw_frames[i - 1]);
    }
    scene.frame_stride = gap;
  }
  return scene;
}

namespace {

// Released ETH/UCY files write ids as "780.00000000"; accept any integral value.
std::optional<std::int64_t> parse_index(std::string_view field) {
  if (auto v = io::parse_integer(field)) return *v;
  auto d = io::parse_double(field);
  if (!d || !std::isfinite(*d) || std::trunc(*d) != *d || std::abs(*d) > 9.0e15) return std::nullopt;
  return static_cast<std::int64_t>(*d);
}

}  // namespace

TrajectoryScene parse_trajectory_text(std::string_view text, ColumnOrder order, std::string scene_id) {
  std::vector<RawRecord> rows;
  std::map<std::pair<std::int64_t, int>, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    auto content = io::trim(line);
    if (content.empty() || content.front() == '#') continue;
    auto fields = split_fields(content);
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields (frame ped a b), found " + std::to_string(fields.size()), line_no);
    }
    auto frame = parse_index(fields[0]);
    auto ped = parse_index(fields[1]);
    auto a = io::parse_double(fields[2]);
    auto b = io::parse_double(fields[3]);
    if (!frame || !ped) throw ParseError("frame and pedestrian id must be integers", line_no);
    if (!a || !b || !std::isfinite(*a) || !std::isfinite(*b)) {
      throw ParseError("coordinates must be finite numbers", line_no);
    }
    if (*ped < std::numeric_limits<int>::min() || *ped > std::numeric_limits<int>::max()) {
      throw ParseError("pedestrian id out of range", line_no);
    }
    RawRecord r{*frame, static_cast<int>(*ped), *a, *b};
    if (order == ColumnOrder::frame_ped_y_x) std::swap(r.x, r.y);
    auto [it, inserted] = seen.emplace(std::make_pair(r.frame, r.ped_id), line_no);
    if (!inserted) {
      throw ParseError("duplicate (frame, pedestrian) pair, first seen on line " + std::to_string(it->second),
                       line_no);
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("trajectory input '" + scene_id + "' contains no records");
  return make_scene(std::move(scene_id), std::move(rows));
}

TrajectoryScene parse_trajectory_file(const std::filesystem::path& path, ColumnOrder order) {
  if (!std::filesystem::exists(path)) throw DataError("trajectory file not found: " + path.string());
  return parse_trajectory_text(io::read_file(path), order, path.stem().string());
}

std::string format_trajectory_text(const TrajectoryScene& scene, ColumnOrder order) {
  std::string out;
  for (const auto& r : scene.records) {
    double a = r.x, b = r.y;
    if (order == ColumnOrder::frame_ped_y_x) std::swap(a, b);
    out += std::to_string(scene.raw_frames[static_cast<std::size_t>(r.step)]);
    out += ' ';
    out += std::to_string(r.ped_id);
    out += ' ';
    out += io::format_double(a);
    out += ' ';
    out += io::format_double(b);
    out += '\n';
  }
  return out;
}

TrajectoryScene scene_prefix(const TrajectoryScene& scene, int end_step) {
  TrajectoryScene out;
  out.scene_id = scene.scene_id;
  out.frame_stride = scene.frame_stride;
  const auto keep = static_cast<std::size_t>(std::clamp<int>(end_step, 0, static_cast<int>(scene.num_steps())));
  out.raw_frames.assign(scene.raw_frames.begin(), scene.raw_frames.begin() + static_cast<std::ptrdiff_t>(keep));
  for (const auto& r : scene.records) {
    if (r.step < end_step) out.records.push_back(r);
  }
  if (out.records.empty()) throw DataError("scene '" + scene.scene_id + "' has no records before the cut");
  out.bounds = compute_bounds(out.records);
  return out;
}

std::vector<Vec2> SequenceWindow::last_observed() const {
  std::vector<Vec2> out(num_peds());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = obs(t_obs - 1, i);
  return out;
}

SequenceWindow to_relative(SequenceWindow window) {
  const std::size_t n = window.num_peds();
  if (window.observed.size() != window.t_obs * n || window.target.size() != window.t_pred * n) {
    throw ShapeError("to_relative: window arrays do not match (t_obs, t_pred, N)");
  }
  window.observed_rel.assign(window.t_obs * n, Vec2{});
  for (std::size_t t = 1; t < window.t_obs; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& cur = window.observed[t * n + i];
      const Vec2& prev = window.observed[(t - 1) * n + i];
      window.observed_rel[t * n + i] = {cur.x - prev.x, cur.y - prev.y};
    }
  }
  window.target_rel.assign(window.t_pred * n, Vec2{});
  for (std::size_t t = 0; t < window.t_pred; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& cur = window.target[t * n + i];
      const Vec2& prev = t == 0 ? window.observed[(window.t_obs - 1) * n + i] : window.target[(t - 1) * n + i];
      window.target_rel[t * n + i] = {cur.x - prev.x, cur.y - prev.y};
    }
  }
  return window;
}

std::vector<SequenceWindow> make_windows(const TrajectoryScene& scene, const WindowOptions& options,
                                         std::size_t scene_index) {
  if (options.t_obs < 1 || options.t_pred < 1) throw std::invalid_argument("make_windows: t_obs and t_pred must be >= 1");
  if (options.stride < 1) throw std::invalid_argument("make_windows: stride must be >= 1");
  const std::size_t length = options.t_obs + options.t_pred;
  std::vector<SequenceWindow> windows;
  if (scene.num_steps() < length) return windows;
  const StepIndex by_step = index_by_step(scene);

  for (std::size_t start = 0; start + length <= scene.num_steps(); start += options.stride) {
    std::vector<int> peds;
    for (const TrajectoryRecord* r : by_step[start]) {
      bool spans = true;
      for (std::size_t t = start + 1; t < start + length && spans; ++t) spans = find_ped(by_step[t], r->ped_id) != nullptr;
      if (spans) peds.push_back(r->ped_id);
    }
    if (peds.empty()) continue;
    SequenceWindow w;
    w.scene_index = scene_index;
    w.start_step = static_cast<int>(start);
    w.t_obs = options.t_obs;
    w.t_pred = options.t_pred;
    w.ped_ids = peds;
    for (std::size_t t = 0; t < length; ++t) {
      auto& dest = t < options.t_obs ? w.observed : w.target;
      for (int ped : peds) {
        const TrajectoryRecord* r = find_ped(by_step[start + t], ped);
        dest.push_back({r->x, r->y});
      }
    }
    windows.push_back(to_relative(std::move(w)));
  }
  return windows;
}

DatasetSplit split_windows(std::vector<SequenceWindow> windows, double eval_fraction) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("eval_fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = windows.size();
  if (n < 2) throw DataError("cannot split " + std::to_string(n) + " window(s) into nonempty train and eval sets");
  auto n_eval = static_cast<std::size_t>(std::floor(static_cast<double>(n) * eval_fraction));
  n_eval = std::clamp<std::size_t>(n_eval, 1, n - 1);

  DatasetSplit split;
  const std::size_t first_eval = n - n_eval;
  const int eval_start = windows[first_eval].start_step;
  for (std::size_t i = 0; i < first_eval; ++i) {
    if (windows[i].last_step() < eval_start) split.train.push_back(std::move(windows[i]));
  }
  for (std::size_t i = first_eval; i < n; ++i) split.eval.push_back(std::move(windows[i]));
  if (split.train.empty()) {
    throw DataError("no training window ends before the evaluation block at step " + std::to_string(eval_start));
  }
  split.eval_start_steps.push_back(eval_start);
  return split;
}

DatasetSplit split_train_eval(std::span<const TrajectoryScene> scenes, double eval_fraction,
                              const WindowOptions& options) {
  if (scenes.empty()) throw DataError("no scenes to split");
  DatasetSplit all;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    DatasetSplit part = split_windows(make_windows(scenes[s], options, s), eval_fraction);
    std::move(part.train.begin(), part.train.end(), std::back_inserter(all.train));
    std::move(part.eval.begin(), part.eval.end(), std::back_inserter(all.eval));
    all.eval_start_steps.push_back(part.eval_start_steps.front());
  }
  return all;
}

}  // namespace rntraj
