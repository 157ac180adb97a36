#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rntraj/dataset.hpp"
#include "rntraj/global_model.hpp"
#include "rntraj/local_model.hpp"
#include "rntraj/training.hpp"

namespace rntraj::cli {

/// Everything a command needs, filled from defaults, then the config file,
/// then `--set key=value` overrides in order.
struct RunConfig {
  std::filesystem::path trajectories;
  ColumnOrder column_order = ColumnOrder::frame_ped_x_y;
  std::filesystem::path output_dir = "out";
  std::filesystem::path roadnet;
  std::filesystem::path rn_checkpoint;
  std::filesystem::path local_checkpoint;

  int grid = 6;
  double eval_fraction = 0.2;
  WindowOptions windows;
  int eval_runs = 5;
  std::uint64_t seed = 0;
  bool report_timing = false;

  RNConfig rn;
  LocalConfig local;
  TrainConfig train;

  /// Throws std::invalid_argument for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);

  std::filesystem::path roadnet_path() const;
  std::filesystem::path rn_checkpoint_path() const;
  std::filesystem::path local_checkpoint_path() const;
  std::filesystem::path output(std::string_view name) const { return output_dir / std::string(name); }

  /// Cross-field checks run once all sources are applied.
  void validate() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view help;
};

/// Every accepted key with a one-line description.
const std::vector<ConfigKey>& config_keys();

/// "key = value" lines; '#' starts a comment. Throws ParseError with the
/// line number on malformed lines or unknown keys.
void apply_config_text(RunConfig& config, std::string_view text);

}  // namespace rntraj::cli
