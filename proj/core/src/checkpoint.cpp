#include "rntraj/checkpoint.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "rntraj/error.hpp"

namespace rntraj {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kHeader = "rntraj-checkpoint v1";

json params_to_json(const ParameterSet& params) {
  json out = json::array();
  for (const auto& entry : params.entries()) {
    json item;
    item["name"] = entry.name;
    item["shape"] = entry.value.shape();
    item["values"] = std::vector<double>(entry.value.data().begin(), entry.value.data().end());
    out.push_back(std::move(item));
  }
  return out;
}

ParameterSet params_from_json(const json& array) {
  ParameterSet params;
  for (const auto& item : array) {
    auto shape = item.at("shape").get<Shape>();
    auto values = item.at("values").get<std::vector<double>>();
    if (values.size() != shape_numel(shape)) {
      throw FormatError("checkpoint: parameter '" + item.at("name").get<std::string>() +
                        "' has the wrong number of values");
    }
    params.add(item.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values)));
  }
  return params;
}

json parse_document(std::string_view text, std::string_view section) {
  const auto newline = text.find('\n');
  if (newline == std::string_view::npos || text.substr(0, newline) != kHeader) {
    throw FormatError("checkpoint: missing '" + std::string(kHeader) + "' header");
  }
  json doc;
  try {
    doc = json::parse(text.substr(newline + 1));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  const auto found = doc.value("section", std::string{});
  if (found != section) {
    throw FormatError("checkpoint: expected a " + std::string(section) + " checkpoint, found '" + found + "'");
  }
  return doc;
}

// Wraps json access and model validation errors as FormatError.
template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace

std::string save_global_checkpoint(const GlobalModel& model) {
  const RNConfig& c = model.config();
  json doc;
  doc["section"] = "global";
  doc["config"] = {{"horizons", c.horizons},     {"input_steps", c.input_steps}, {"hidden_dim", c.hidden_dim},
                   {"gcn_hops", c.gcn_hops},     {"latent_dim", c.latent_dim}};
  doc["n_active"] = model.n_active();
  doc["parameters"] = params_to_json(model.params());
  return std::string(kHeader) + "\n" + doc.dump(1) + "\n";
}

GlobalModel load_global_checkpoint(std::string_view text) {
  const json doc = parse_document(text, "global");
  return guarded([&] {
    const json& jc = doc.at("config");
    RNConfig c;
    c.horizons = jc.at("horizons").get<std::vector<int>>();
    c.input_steps = jc.at("input_steps").get<int>();
    c.hidden_dim = jc.at("hidden_dim").get<int>();
    c.gcn_hops = jc.at("gcn_hops").get<int>();
    c.latent_dim = jc.at("latent_dim").get<int>();
    GlobalModel model(c, doc.at("n_active").get<std::size_t>(), params_from_json(doc.at("parameters")));
    model.params().set_trainable(false);
    return model;
  });
}

std::string save_local_checkpoint(const LocalTrainState& state, bool fused) {
  const LocalConfig& c = state.model.config();
  json doc;
  doc["section"] = "local";
  doc["fused"] = fused;
  doc["config"] = {{"t_obs", c.t_obs},
                   {"t_pred", c.t_pred},
                   {"hidden_dim", c.hidden_dim},
                   {"fusion_dim", c.fusion_dim},
                   {"trip_latent_dim", c.trip_latent_dim},
                   {"adapter_channels", c.adapter_channels},
                   {"adapter_hidden", c.adapter_hidden},
                   {"alpha_init", c.alpha_init}};
  doc["config"]["neighbor_distance"] =
      std::isfinite(c.neighbor_distance) ? json(c.neighbor_distance) : json(nullptr);
  doc["optimizer"] = {{"kind", to_string(state.optimizer.kind)},
                      {"learning_rate", state.optimizer.learning_rate},
                      {"weight_decay", state.optimizer.weight_decay},
                      {"epsilon", state.optimizer.epsilon},
                      {"accumulators", state.optimizer.accumulators}};
  doc["epochs_done"] = state.epochs_done;
  doc["parameters"] = params_to_json(state.model.params());
  return std::string(kHeader) + "\n" + doc.dump(1) + "\n";
}

LoadedLocalCheckpoint load_local_checkpoint(std::string_view text) {
  const json doc = parse_document(text, "local");
  return guarded([&] {
    const json& jc = doc.at("config");
    LocalConfig c;
    c.t_obs = jc.at("t_obs").get<int>();
    c.t_pred = jc.at("t_pred").get<int>();
    c.hidden_dim = jc.at("hidden_dim").get<int>();
    c.fusion_dim = jc.at("fusion_dim").get<int>();
    c.trip_latent_dim = jc.at("trip_latent_dim").get<int>();
    c.adapter_channels = jc.at("adapter_channels").get<int>();
    c.adapter_hidden = jc.at("adapter_hidden").get<int>();
    c.alpha_init = jc.at("alpha_init").get<double>();
    const json& nd = jc.at("neighbor_distance");
    c.neighbor_distance = nd.is_null() ? std::numeric_limits<double>::infinity() : nd.get<double>();

    const json& jo = doc.at("optimizer");
    OptimizerState opt;
    opt.kind = optimizer_kind_from_string(jo.at("kind").get<std::string>());
    opt.learning_rate = jo.at("learning_rate").get<double>();
    opt.weight_decay = jo.at("weight_decay").get<double>();
    opt.epsilon = jo.at("epsilon").get<double>();
    opt.accumulators = jo.at("accumulators").get<std::vector<std::vector<double>>>();

    LocalModel model(c, params_from_json(doc.at("parameters")));
    if (!opt.accumulators.empty() && opt.accumulators.size() != model.params().size()) {
      throw FormatError("checkpoint: optimizer accumulators do not match the parameters");
    }
    LoadedLocalCheckpoint out{{std::move(model), std::move(opt), doc.at("epochs_done").get<int>()},
                              doc.at("fused").get<bool>()};
    return out;
  });
}

}  // namespace rntraj
