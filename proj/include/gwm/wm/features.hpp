#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gwm/data/trajectory.hpp"
#include "gwm/nn/gatv2.hpp"
#include "gwm/sim/types.hpp"

namespace gwm::wm {

// Per-node observation layout fed to the encoder. All entries are scaled to
// stay O(1): positions by the area side, velocities by the top speed, energy
// by the initial budget, degree by n-1, cluster index by n (-1 stays -1/n).
inline constexpr std::int32_t kNodeFeatures = 9;

void node_features(const sim::NetSnapshot& s, const sim::ScenarioConfig& sc, double* out);

// In-edges in CSR form for one snapshot, self-loops included for every node.
// The single edge feature is log10 of the received-power margin over the
// detection threshold; self-loops carry zero. row_base shifts all row indices
// so several snapshots can share one block-diagonal graph.
void append_edges(const sim::NetSnapshot& s, const sim::ScenarioConfig& sc,
                  std::int32_t row_base, nn::GraphEdges& edges);

// Maps every distinct episode scenario name to its resolved config. Names are
// looked up via load_scenario, so file paths recorded as scenario names work.
std::map<std::string, sim::ScenarioConfig> resolve_scenarios(const data::Dataset& ds);

}  // namespace gwm::wm
