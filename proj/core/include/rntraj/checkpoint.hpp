#pragma once

#include <string>
#include <string_view>

#include "rntraj/global_model.hpp"
#include "rntraj/training.hpp"

namespace rntraj {

// Checkpoints are a header line followed by a JSON document holding the
// section name ("global" or "local"), an echo of the model configuration and
// every parameter as {name, shape, values}. Values use shortest round-trip
// decimals, so loading reproduces the saved doubles exactly.

std::string save_global_checkpoint(const GlobalModel& model);
/// Throws FormatError on any structural problem.
GlobalModel load_global_checkpoint(std::string_view text);

/// Local checkpoints also carry the optimizer state and epoch counter so
/// training can resume, and whether the model was trained with trip latents.
std::string save_local_checkpoint(const LocalTrainState& state, bool fused);

struct LoadedLocalCheckpoint {
  LocalTrainState state;
  bool fused = false;
};
LoadedLocalCheckpoint load_local_checkpoint(std::string_view text);

}  // namespace rntraj
