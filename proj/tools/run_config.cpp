#include "run_config.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "rntraj/error.hpp"
#include "rntraj/io.hpp"

namespace rntraj::cli {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw std::invalid_argument("config key '" + std::string(key) + "': expected " + std::string(expected) +
                              ", got '" + std::string(value) + "'");
}

long long to_int(std::string_view key, std::string_view v) {
  auto n = io::parse_integer(v);
  if (!n) bad_value(key, v, "an integer");
  return *n;
}

int to_int32(std::string_view key, std::string_view v) {
  const long long n = to_int(key, v);
  if (n < -(1LL << 31) || n >= (1LL << 31)) bad_value(key, v, "a 32-bit integer");
  return static_cast<int>(n);
}

double to_real(std::string_view key, std::string_view v) {
  auto d = io::parse_double(v);
  if (!d || std::isnan(*d)) bad_value(key, v, "a number");
  return *d;
}

double to_finite(std::string_view key, std::string_view v) {
  const double d = to_real(key, v);
  if (!std::isfinite(d)) bad_value(key, v, "a finite number");
  return d;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::vector<int> to_int_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    auto comma = v.find(',', pos);
    if (comma == std::string_view::npos) comma = v.size();
    out.push_back(to_int32(key, io::trim(v.substr(pos, comma - pos))));
    pos = comma + 1;
  }
  return out;
}

std::size_t to_count(std::string_view key, std::string_view v) {
  const long long n = to_int(key, v);
  if (n < 1) bad_value(key, v, "a positive integer");
  return static_cast<std::size_t>(n);
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

struct KeyEntry {
  std::string_view help;
  Setter set;
};

const std::map<std::string_view, KeyEntry>& key_table() {
  static const std::map<std::string_view, KeyEntry> table = {
      {"trajectories",
       {"trajectory annotation file (frame ped a b per line)",
        [](RunConfig& c, auto, auto v) { c.trajectories = std::string(v); }}},
      {"column_order",
       {"frame_ped_x_y or frame_ped_y_x",
        [](RunConfig& c, auto, auto v) { c.column_order = column_order_from_string(v); }}},
      {"output_dir",
       {"directory for every output file (default out)",
        [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); }}},
      {"roadnet",
       {"road network file (default <output_dir>/roadnet.txt)",
        [](RunConfig& c, auto, auto v) { c.roadnet = std::string(v); }}},
      {"rn_checkpoint",
       {"global model checkpoint (default <output_dir>/rn_checkpoint.txt)",
        [](RunConfig& c, auto, auto v) { c.rn_checkpoint = std::string(v); }}},
      {"local_checkpoint",
       {"local model checkpoint (default <output_dir>/local_checkpoint.txt)",
        [](RunConfig& c, auto, auto v) { c.local_checkpoint = std::string(v); }}},
      {"grid", {"grid cells per axis (default 6)", [](RunConfig& c, auto k, auto v) { c.grid = to_int32(k, v); }}},
      {"eval_fraction",
       {"share of each scene's windows held out from its tail (default 0.2)",
        [](RunConfig& c, auto k, auto v) { c.eval_fraction = to_finite(k, v); }}},
      {"t_obs",
       {"observed steps per window (default 8)",
        [](RunConfig& c, auto k, auto v) {
          c.windows.t_obs = to_count(k, v);
          c.local.t_obs = static_cast<int>(c.windows.t_obs);
        }}},
      {"t_pred",
       {"predicted steps per window (default 12)",
        [](RunConfig& c, auto k, auto v) {
          c.windows.t_pred = to_count(k, v);
          c.local.t_pred = static_cast<int>(c.windows.t_pred);
        }}},
      {"window_stride",
       {"steps between window starts (default 1)",
        [](RunConfig& c, auto k, auto v) { c.windows.stride = to_count(k, v); }}},
      {"eval_runs",
       {"sampling runs averaged by eval (default 5)",
        [](RunConfig& c, auto k, auto v) { c.eval_runs = to_int32(k, v); }}},
      {"seed",
       {"master seed for initialization, shuffling and sampling (default 0)",
        [](RunConfig& c, auto k, auto v) {
          const long long s = to_int(k, v);
          if (s < 0) bad_value(k, v, "a nonnegative integer");
          c.seed = static_cast<std::uint64_t>(s);
          c.train.seed = c.seed;
        }}},
      {"report_timing",
       {"write wall time into training reports (default false)",
        [](RunConfig& c, auto k, auto v) { c.report_timing = to_bool(k, v); }}},
      {"horizons",
       {"global model horizons, comma separated (default 1,4,8)",
        [](RunConfig& c, auto k, auto v) { c.rn.horizons = to_int_list(k, v); }}},
      {"rn_input_steps",
       {"occupancy steps fed to the global model (default 8)",
        [](RunConfig& c, auto k, auto v) { c.rn.input_steps = to_int32(k, v); }}},
      {"rn_hidden_dim",
       {"global model hidden width (default 32)",
        [](RunConfig& c, auto k, auto v) { c.rn.hidden_dim = to_int32(k, v); }}},
      {"rn_gcn_hops",
       {"adjacency hops in the graph convolution (default 1)",
        [](RunConfig& c, auto k, auto v) { c.rn.gcn_hops = to_int32(k, v); }}},
      {"rn_latent_dim",
       {"latent width per horizon (default 16)",
        [](RunConfig& c, auto k, auto v) { c.rn.latent_dim = to_int32(k, v); }}},
      {"local_hidden_dim",
       {"local model hidden width (default 16)",
        [](RunConfig& c, auto k, auto v) { c.local.hidden_dim = to_int32(k, v); }}},
      {"fusion_dim",
       {"width of the fused trip feature (default 8)",
        [](RunConfig& c, auto k, auto v) { c.local.fusion_dim = to_int32(k, v); }}},
      {"adapter_channels",
       {"fusion adapter convolution channels (default 2)",
        [](RunConfig& c, auto k, auto v) { c.local.adapter_channels = to_int32(k, v); }}},
      {"adapter_hidden",
       {"fusion adapter hidden width (default 32)",
        [](RunConfig& c, auto k, auto v) { c.local.adapter_hidden = to_int32(k, v); }}},
      {"alpha_init",
       {"initial fusion weight (default 0.1)",
        [](RunConfig& c, auto k, auto v) { c.local.alpha_init = to_finite(k, v); }}},
      {"neighbor_distance",
       {"social interaction cutoff in meters (default inf)",
        [](RunConfig& c, auto k, auto v) { c.local.neighbor_distance = to_real(k, v); }}},
      {"rn_epochs",
       {"global model epochs (default 50)",
        [](RunConfig& c, auto k, auto v) { c.train.rn_epochs = to_int32(k, v); }}},
      {"local_epochs",
       {"local model epochs (default 250)",
        [](RunConfig& c, auto k, auto v) { c.train.local_epochs = to_int32(k, v); }}},
      {"rn_lr",
       {"global model SGD learning rate (default 0.01)",
        [](RunConfig& c, auto k, auto v) { c.train.rn_lr = to_finite(k, v); }}},
      {"rn_weight_decay",
       {"global model weight decay (default 0.001)",
        [](RunConfig& c, auto k, auto v) { c.train.rn_weight_decay = to_finite(k, v); }}},
      {"local_optimizer",
       {"sgd or adagrad (default sgd)",
        [](RunConfig& c, auto, auto v) { c.train.local_optimizer = optimizer_kind_from_string(v); }}},
      {"local_lr",
       {"local model learning rate (default 0.01)",
        [](RunConfig& c, auto k, auto v) { c.train.local_lr = to_finite(k, v); }}},
      {"local_weight_decay",
       {"local model weight decay (default 0)",
        [](RunConfig& c, auto k, auto v) { c.train.local_weight_decay = to_finite(k, v); }}},
      {"lambda_huber",
       {"weight of the global model's Huber term (default 1)",
        [](RunConfig& c, auto k, auto v) { c.train.lambda_huber = to_finite(k, v); }}},
      {"lambda_local",
       {"weight of the trajectory NLL (default 1)",
        [](RunConfig& c, auto k, auto v) { c.train.lambda_local = to_finite(k, v); }}},
      {"lambda_l1",
       {"weight of the L1 penalty (default 1e-5)",
        [](RunConfig& c, auto k, auto v) { c.train.lambda_l1 = to_finite(k, v); }}},
      {"lambda_l2",
       {"weight of the L2 penalty (default 1e-4)",
        [](RunConfig& c, auto k, auto v) { c.train.lambda_l2 = to_finite(k, v); }}},
      {"huber_delta",
       {"Huber transition point (default 1)",
        [](RunConfig& c, auto k, auto v) { c.train.huber_delta = to_finite(k, v); }}},
      {"batch_size",
       {"windows per optimizer step (default 1)",
        [](RunConfig& c, auto k, auto v) { c.train.batch_size = to_int32(k, v); }}},
      {"grad_clip",
       {"gradient norm cap for local training, 0 disables (default 0)",
        [](RunConfig& c, auto k, auto v) { c.train.grad_clip = to_finite(k, v); }}},
      {"shuffle",
       {"shuffle training windows each epoch (default true)",
        [](RunConfig& c, auto k, auto v) { c.train.shuffle = to_bool(k, v); }}},
  };
  return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto& table = key_table();
  auto it = table.find(key);
  if (it == table.end()) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  it->second.set(*this, key, io::trim(value));
}

std::filesystem::path RunConfig::roadnet_path() const { return roadnet.empty() ? output("roadnet.txt") : roadnet; }

std::filesystem::path RunConfig::rn_checkpoint_path() const {
  return rn_checkpoint.empty() ? output("rn_checkpoint.txt") : rn_checkpoint;
}

std::filesystem::path RunConfig::local_checkpoint_path() const {
  return local_checkpoint.empty() ? output("local_checkpoint.txt") : local_checkpoint;
}

void RunConfig::validate() const {
  if (grid < 1) throw std::invalid_argument("grid must be >= 1");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) throw std::invalid_argument("eval_fraction must be in (0, 1)");
  if (eval_runs < 1) throw std::invalid_argument("eval_runs must be >= 1");
  rn.validate();
  local.validate();
  train.validate();
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& [name, entry] : key_table()) out.push_back({name, entry.help});
    return out;
  }();
  return keys;
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = io::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = io::trim(line.substr(0, eq));
    try {
      config.set(key, line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

}  // namespace rntraj::cli
