#pragma once

#include <vector>

#include "gwm/config.hpp"
#include "gwm/sim/types.hpp"

namespace gwm::sim {

// Reads a scenario from flat config keys (see docs in configs/default.cfg).
// Requires schema_version = 1. channel.r_c may be given instead of
// channel.gamma_rx; giving both is an error.
ScenarioConfig scenario_from_config(const Config& cfg);

// Full resolved key set, inverse of scenario_from_config.
Config scenario_to_config(const ScenarioConfig& sc);

// Built-in scenario presets spanning six deployment categories and node
// counts from 30 to 1000.
const std::vector<ScenarioConfig>& scenario_catalog();

// Catalog lookup by name; throws ConfigError for unknown names.
const ScenarioConfig& find_scenario(const std::string& name);

// Resolves a --scenario argument: an existing file path is parsed as a
// config file, anything else must be a catalog name.
ScenarioConfig load_scenario(const std::string& name_or_path);

// Data-collection mix: the default scenario plus five mobility variants.
std::vector<ScenarioConfig> collection_scenarios();

}  // namespace gwm::sim
