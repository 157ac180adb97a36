#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rntraj {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// One annotation. `step` is the consecutive annotation index (raw frame
/// numbers are kept on the scene).
struct TrajectoryRecord {
  int step = 0;
  int ped_id = 0;
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

struct Bounds {
  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

enum class ColumnOrder { frame_ped_x_y, frame_ped_y_x };

ColumnOrder column_order_from_string(std::string_view name);
std::string_view to_string(ColumnOrder order);

struct TrajectoryScene {
  std::string scene_id;
  /// Sorted by (step, ped_id); (step, ped_id) pairs are unique.
  std::vector<TrajectoryRecord> records;
  /// raw_frames[step] is the frame number from the source file.
  std::vector<std::int64_t> raw_frames;
  Bounds bounds;
  /// Smallest gap between consecutive annotated raw frames. Informational.
  std::int64_t frame_stride = 1;

  std::size_t num_steps() const noexcept { return raw_frames.size(); }
  friend bool operator==(const TrajectoryScene&, const TrajectoryScene&) = default;
};

struct RawRecord {
  std::int64_t frame = 0;
  int ped_id = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Builds a scene from raw (frame, ped, x, y) rows: sorts, remaps frames to
/// consecutive steps, computes bounds. Throws DataError on duplicates or when
/// `rows` is empty.
TrajectoryScene make_scene(std::string scene_id, std::vector<RawRecord> rows);

/// Whitespace-separated "frame ped a b" lines; '#' lines and blank lines are
/// skipped. Throws ParseError (with line number) on malformed or duplicate
/// rows and DataError on an empty scene.
TrajectoryScene parse_trajectory_text(std::string_view text, ColumnOrder order, std::string scene_id);
TrajectoryScene parse_trajectory_file(const std::filesystem::path& path, ColumnOrder order);

/// Inverse of parse_trajectory_text (shortest round-trip decimals).
std::string format_trajectory_text(const TrajectoryScene& scene, ColumnOrder order = ColumnOrder::frame_ped_x_y);

/// Records with step < end_step, bounds recomputed over what remains.
TrajectoryScene scene_prefix(const TrajectoryScene& scene, int end_step);

/// Training sample: pedestrians present at every step of
/// [start_step, start_step + t_obs + t_pred). Point arrays are indexed
/// [t * num_peds() + i].
struct SequenceWindow {
  std::size_t scene_index = 0;
  int start_step = 0;
  std::size_t t_obs = 0;
  std::size_t t_pred = 0;
  std::vector<int> ped_ids;
  std::vector<Vec2> observed;
  std::vector<Vec2> target;
  /// observed_rel[t] = observed[t] - observed[t-1]; zero at t = 0.
  std::vector<Vec2> observed_rel;
  /// target_rel[0] = target[0] - observed[t_obs-1], then successive differences.
  std::vector<Vec2> target_rel;

  std::size_t num_peds() const noexcept { return ped_ids.size(); }
  int last_step() const noexcept { return start_step + static_cast<int>(t_obs + t_pred) - 1; }
  const Vec2& obs(std::size_t t, std::size_t i) const { return observed[t * num_peds() + i]; }
  const Vec2& tgt(std::size_t t, std::size_t i) const { return target[t * num_peds() + i]; }
  std::vector<Vec2> last_observed() const;
};

struct WindowOptions {
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t stride = 1;
};

/// One window per start step (advancing by `stride`) that has at least one
/// pedestrian spanning the whole window. Relative features are filled in.
std::vector<SequenceWindow> make_windows(const TrajectoryScene& scene, const WindowOptions& options = {},
                                         std::size_t scene_index = 0);

SequenceWindow to_relative(SequenceWindow window);

struct DatasetSplit {
  std::vector<SequenceWindow> train;
  std::vector<SequenceWindow> eval;
  /// Per scene: first step of the evaluation block. Training windows end before it.
  std::vector<int> eval_start_steps;
};

/// Tail-block split of one scene's windows (ordered by start step): the last
/// max(1, floor(n * eval_fraction)) windows are held out and training windows
/// that share a step with them are dropped.
DatasetSplit split_windows(std::vector<SequenceWindow> windows, double eval_fraction);

/// Windows every scene and splits each one independently.
DatasetSplit split_train_eval(std::span<const TrajectoryScene> scenes, double eval_fraction,
                              const WindowOptions& options = {});

}  // namespace rntraj
