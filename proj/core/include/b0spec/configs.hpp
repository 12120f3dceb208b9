#pragma once

#include <string_view>

#include "b0spec/nn/network.hpp"

namespace b0spec {

/// JSON of a shipped architecture: "generator1", "generator2" or "analyzer".
std::string_view frozen_config_text(std::string_view name);
/// Uninitialized network built from the shipped architecture.
nn::Network frozen_network(std::string_view name);

/// Experiment config preset: "desk" (scaled-down epochs) or "full" (all defaults).
std::string_view experiment_preset_text(std::string_view name);

}  // namespace b0spec
