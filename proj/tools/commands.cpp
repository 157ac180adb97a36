#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "rntraj/checkpoint.hpp"
#include "rntraj/error.hpp"
#include "rntraj/eval.hpp"
#include "rntraj/io.hpp"
#include "rntraj/roadnet.hpp"
#include "rntraj/training.hpp"
#include "run_config.hpp"

namespace rntraj::cli {

namespace {

namespace fs = std::filesystem;

// Independent random streams derived from the master seed.
constexpr std::uint64_t kLocalInitStream = 1;
constexpr std::uint64_t kGlobalInitStream = 2;
constexpr std::uint64_t kEvalStream = 3;
constexpr std::uint64_t kPredictStream = 4;

std::string fixed(double value, int digits = 6) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

fs::path sibling(const fs::path& path, std::string_view suffix) {
  fs::path out = path;
  out.replace_extension();
  out += std::string(suffix);
  return out;
}

std::string read_input(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path.string());
  return io::read_file(path);
}

/// Files are only written once every output of a command has been computed.
class PendingWrites {
 public:
  void add(fs::path path, std::string contents) { files_.emplace_back(std::move(path), std::move(contents)); }
  void commit(std::ostream& out) const {
    for (const auto& [path, contents] : files_) {
      io::atomic_write_file(path, contents);
      out << "wrote " << path.string() << "\n";
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

struct SceneData {
  TrajectoryScene scene;
  DatasetSplit split;
  int eval_start = 0;
};

SceneData load_scene(const RunConfig& config) {
  if (config.trajectories.empty()) throw std::invalid_argument("config key 'trajectories' is not set");
  SceneData d;
  d.scene = parse_trajectory_file(config.trajectories, config.column_order);
  std::vector<TrajectoryScene> scenes{d.scene};
  d.split = split_train_eval(scenes, config.eval_fraction, config.windows);
  d.eval_start = d.split.eval_start_steps.front();
  return d;
}

RoadNetworkGraph load_network(const RunConfig& config) {
  const auto path = config.roadnet_path();
  try {
    return parse_road_network(read_input(path, "road network file"));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

GlobalModel load_global(const RunConfig& config) {
  const auto path = config.rn_checkpoint_path();
  try {
    return load_global_checkpoint(read_input(path, "global model checkpoint"));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

LoadedLocalCheckpoint load_local(const RunConfig& config) {
  const auto path = config.local_checkpoint_path();
  try {
    return load_local_checkpoint(read_input(path, "local model checkpoint"));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Frozen global model plus occupancy of the scene on its network.
struct GlobalContext {
  std::optional<FrozenGlobalModel> frozen;
  std::vector<OccupancySeries> occupancy;

  const FrozenGlobalModel* get() const { return frozen ? &*frozen : nullptr; }
};

GlobalContext load_global_context(const RunConfig& config, const TrajectoryScene& scene) {
  GlobalContext ctx;
  RoadNetworkGraph network = load_network(config);
  ctx.frozen.emplace(load_global(config), network);
  ctx.occupancy.push_back(occupancy_on(network, scene));
  return ctx;
}

std::vector<LocalSample> local_samples(const RunConfig& config, std::span<const SequenceWindow> windows,
                                       const GlobalContext& global, double neighbor_distance) {
  return prepare_local_samples(windows, global.get(), global.occupancy, config.train.huber_delta, neighbor_distance);
}

void print_report_summary(std::ostream& out, const TrainReport& report) {
  if (report.epochs.empty()) return;
  const auto& first = report.epochs.front();
  const auto& last = report.epochs.back();
  out << report.phase << " training: epoch " << first.epoch << " loss " << fixed(first.loss) << ", epoch "
      << last.epoch << " loss " << fixed(last.loss) << ", best epoch " << report.best_epoch << " ("
      << fixed(report.wall_seconds, 2) << " s)\n";
}

// ---------------------------------------------------------------------------

int cmd_build_roadnet(const RunConfig& config, std::ostream& out) {
  SceneData data = load_scene(config);
  TrajectoryScene history = scene_prefix(data.scene, data.eval_start);
  RoadNetworkGraph network = build_road_network(history, config.grid);
  PendingWrites writes;
  writes.add(config.roadnet_path(), serialize_road_network(network));
  writes.commit(out);
  out << "road network: " << network.n_active() << " active nodes, " << network.edges.size() << " edges, "
      << network.occupancy.steps << " steps\n";
  return 0;
}

int cmd_pretrain_rn(const RunConfig& config, std::ostream& out) {
  SceneData data = load_scene(config);
  RoadNetworkGraph network = load_network(config);
  OccupancySeries occupancy = occupancy_on(network, data.scene);
  std::vector<RNSample> samples = make_rn_samples(occupancy, config.rn, data.eval_start);
  Rng rng(derive_seed(config.seed, kGlobalInitStream));
  GlobalModel model(config.rn, network.n_active(), rng);
  RNGraphContext graph = RNGraphContext::from_network(network, config.rn.gcn_hops);
  PretrainResult result = pretrain_rn(std::move(model), graph, samples, config.train);

  PendingWrites writes;
  const auto checkpoint = config.rn_checkpoint_path();
  writes.add(checkpoint, save_global_checkpoint(result.best));
  writes.add(sibling(checkpoint, ".report.jsonl"), serialize_report(result.report, config.report_timing));
  writes.commit(out);
  print_report_summary(out, result.report);
  out << "final Huber loss " << fixed(result.report.epochs.back().loss) << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, bool with_rn, bool resume, std::ostream& out) {
  SceneData data = load_scene(config);
  GlobalContext global;
  LocalConfig local = config.local;
  local.trip_latent_dim = config.rn.trip_latent_dim();
  if (with_rn) {
    global = load_global_context(config, data.scene);
    local.trip_latent_dim = global.frozen->model().config().trip_latent_dim();
  }

  LocalTrainState state = [&] {
    if (resume) {
      LoadedLocalCheckpoint loaded = load_local(config);
      if (loaded.fused != with_rn) {
        throw std::invalid_argument(with_rn ? "cannot resume a baseline checkpoint with --with-rn"
                                            : "checkpoint was trained with --with-rn");
      }
      return std::move(loaded.state);
    }
    Rng rng(derive_seed(config.seed, kLocalInitStream));
    return make_local_state(LocalModel(local, rng), config.train);
  }();
  const double neighbor_distance = state.model.config().neighbor_distance;
  std::vector<LocalSample> samples = local_samples(config, data.split.train, global, neighbor_distance);
  out << "training on " << samples.size() << " windows" << (with_rn ? " with trip latents" : "") << "\n";
  LocalTrainResult result = train_local(std::move(state), samples, config.train);

  PendingWrites writes;
  const auto checkpoint = config.local_checkpoint_path();
  writes.add(checkpoint, save_local_checkpoint(result.state, with_rn));
  writes.add(sibling(checkpoint, ".report.jsonl"), serialize_report(result.report, config.report_timing));
  writes.commit(out);
  print_report_summary(out, result.report);
  return 0;
}

struct EvalInputs {
  LocalModel model;
  std::vector<LocalSample> samples;
};

EvalInputs eval_inputs(const RunConfig& config) {
  SceneData data = load_scene(config);
  LoadedLocalCheckpoint loaded = load_local(config);
  GlobalContext global;
  if (loaded.fused) global = load_global_context(config, data.scene);
  const double neighbor_distance = loaded.state.model.config().neighbor_distance;
  auto samples = local_samples(config, data.split.eval, global, neighbor_distance);
  return {std::move(loaded.state.model), std::move(samples)};
}

int cmd_eval(const RunConfig& config, std::ostream& out) {
  EvalInputs inputs = eval_inputs(config);
  EvalResult result =
      evaluate_model(inputs.model, inputs.samples, config.eval_runs, derive_seed(config.seed, kEvalStream));
  PendingWrites writes;
  writes.add(sibling(config.local_checkpoint_path(), ".eval.json"), serialize_eval(result));
  writes.commit(out);
  out << "ADE " << fixed(result.ade) << "  FDE " << fixed(result.fde) << "  segmented ADE";
  for (double s : result.segmented_ade) out << " " << fixed(s);
  out << "  (" << result.runs << " runs, " << result.windows << " windows)\n";
  return 0;
}

int cmd_predict(const RunConfig& config, std::ostream& out) {
  EvalInputs inputs = eval_inputs(config);
  if (inputs.samples.empty()) throw DataError("no evaluation windows to predict");
  const std::uint64_t seed = derive_seed(config.seed, kPredictStream);
  std::string text = "# rntraj-predictions v1\nwindow,start_step,ped_id,step,mean_x,mean_y,sample_x,sample_y\n";
  for (std::size_t w = 0; w < inputs.samples.size(); ++w) {
    const LocalSample& s = inputs.samples[w];
    const Tensor* trip = s.trip_latent ? &*s.trip_latent : nullptr;
    GaussianTrajectoryParams params = local_forward(s.window, s.graph, trip, inputs.model);
    Rng rng(derive_seed(seed, w));
    const auto last = s.window.last_observed();
    const auto mean = mean_trajectory(params, last);
    const auto sample = sample_trajectory(params, rng, last);
    const std::size_t peds = s.window.num_peds();
    for (std::size_t i = 0; i < peds; ++i) {
      for (std::size_t t = 0; t < s.window.t_pred; ++t) {
        const std::size_t k = t * peds + i;
        text += std::to_string(w) + "," + std::to_string(s.window.start_step) + "," +
                std::to_string(s.window.ped_ids[i]) + "," +
                std::to_string(s.window.start_step + static_cast<int>(s.window.t_obs + t)) + "," +
                io::format_double(mean[k].x) + "," + io::format_double(mean[k].y) + "," +
                io::format_double(sample[k].x) + "," + io::format_double(sample[k].y) + "\n";
      }
    }
  }
  PendingWrites writes;
  writes.add(sibling(config.local_checkpoint_path(), ".predictions.csv"), std::move(text));
  writes.commit(out);
  out << "predicted " << inputs.samples.size() << " windows\n";
  return 0;
}

int cmd_export_heatmap(const RunConfig& config, std::optional<int> end_step, std::ostream& out) {
  SceneData data = load_scene(config);
  RoadNetworkGraph network = load_network(config);
  FrozenGlobalModel frozen(load_global(config), network);
  OccupancySeries occupancy = occupancy_on(network, data.scene);
  const int end = end_step.value_or(data.eval_start);
  if (end < 1 || end > static_cast<int>(occupancy.steps)) {
    throw std::invalid_argument("--end-step must be in [1, " + std::to_string(occupancy.steps) + "]");
  }
  const RNConfig& rc = frozen.model().config();
  RNForwardOutput forecast = frozen.forward(occupancy_window(occupancy, end, rc.input_steps));

  const int gr = network.grid.gr;
  PendingWrites writes;
  for (std::size_t k = 0; k < rc.horizons.size(); ++k) {
    const int h = rc.horizons[k];
    const Tensor& pred = forecast.predictions[k];
    const std::size_t last_row = static_cast<std::size_t>(h - 1) * network.n_active();
    std::string text = "# rntraj-heatmap v1 horizon=" + std::to_string(h) + " step=" + std::to_string(end + h - 1) +
                       " grid=" + std::to_string(gr) + "x" + std::to_string(gr) + " row0=min_y col0=min_x\n";
    for (int row = 0; row < gr; ++row) {
      for (int col = 0; col < gr; ++col) {
        if (col > 0) text += ',';
        const int node = network.node_of_cell(network.grid.cell_id({col, row}));
        if (node >= 0) text += io::format_double(pred.at(last_row + static_cast<std::size_t>(node)));
      }
      text += '\n';
    }
    writes.add(config.output("heatmap_h" + std::to_string(h) + ".csv"), std::move(text));
  }
  writes.commit(out);
  out << "exported " << rc.horizons.size() << " heatmaps forecast from step " << end << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crowd-aware pedestrian trajectory prediction with a road-network global model", "rntraj"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  bool with_rn = false;
  bool resume = false;
  std::optional<int> end_step;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "configuration file of 'key = value' lines");
    sub->add_option("-s,--set", overrides, "override a configuration key (key=value), applied after the file")
        ->allow_extra_args(false);
  };
  auto* build = app.add_subcommand("build-roadnet", "build the grid road network from the training history");
  auto* pretrain = app.add_subcommand("pretrain-rn", "pretrain the global occupancy model");
  auto* train = app.add_subcommand("train", "train the local trajectory model");
  auto* eval = app.add_subcommand("eval", "evaluate ADE/FDE on the held-out windows");
  auto* predict = app.add_subcommand("predict", "write predicted trajectories for the held-out windows");
  auto* heatmap = app.add_subcommand("export-heatmap", "write predicted occupancy grids, one per horizon");
  for (auto* sub : {build, pretrain, train, eval, predict, heatmap}) add_common(sub);
  train->add_flag("--with-rn", with_rn, "fuse trip latents from the pretrained global model");
  train->add_flag("--resume", resume, "continue from the existing local checkpoint");
  heatmap->add_option("--end-step", end_step, "forecast from the occupancy ending at this step");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig config;
    if (!config_path.empty()) {
      const std::string text = read_input(config_path, "config file");
      try {
        apply_config_text(config, text);
      } catch (const ParseError& e) {
        throw ParseError(config_path + ": " + e.what(), 0);
      }
    }
    for (const auto& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + item + "'");
      config.set(io::trim(std::string_view(item).substr(0, eq)), std::string_view(item).substr(eq + 1));
    }
    config.train.seed = config.seed;
    config.validate();

    if (build->parsed()) return cmd_build_roadnet(config, out);
    if (pretrain->parsed()) return cmd_pretrain_rn(config, out);
    if (train->parsed()) return cmd_train(config, with_rn, resume, out);
    if (eval->parsed()) return cmd_eval(config, out);
    if (predict->parsed()) return cmd_predict(config, out);
    return cmd_export_heatmap(config, end_step, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rntraj::cli
