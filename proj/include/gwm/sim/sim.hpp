#pragma once

#include "gwm/rng.hpp"
#include "gwm/sim/types.hpp"

namespace gwm::sim {

// Received power at distance d; distances below d0 are treated as d0 so the
// model stays bounded at zero separation. Negative d is a caller bug.
double received_power(const ChannelParams& ch, double d);

// Radius at which received power equals gamma_rx.
double capture_radius(const ChannelParams& ch);

double node_distance(const NetSnapshot& s, std::int32_t i, std::int32_t j);

// Recomputes power and adjacency from positions and alive flags.
void build_adjacency(NetSnapshot& s, const ChannelParams& ch);

// Fresh network: uniform positions and waypoints, full energy, no clusters.
NetSnapshot init_episode(const ScenarioConfig& sc, Rng& rng);

// Members attach to the adjacent alive CH with the strongest received power,
// ties broken by lower CH index; nodes without an adjacent CH stay -1.
void assign_clusters(NetSnapshot& s);

// Pays per-step costs based on current roles and distances, then marks nodes
// at or below e_death dead (flags cleared, velocity zeroed).
void step_energy(NetSnapshot& s, const EnergyParams& ep);

// Random-waypoint update for alive nodes. On arrival the node rests for the
// configured pause, then draws a new waypoint and speed.
void step_mobility(NetSnapshot& s, const ScenarioConfig& sc, Rng& rng);

// Fraction of alive nodes that are a CH or adjacent to an alive CH.
// All-dead snapshots score 0.
double connectivity_ratio(const NetSnapshot& s);

struct RewardBreakdown {
    double stability = 0.0;
    double energy = 0.0;
    double connectivity = 0.0;
    double ch_count = 0.0;
    double temporal = 0.0;
    double penalty = 0.0;
    double total = 0.0;
};

// Reward for the transition that produced `cur` from `prev`. e_init scales
// the residual-energy term to [0, 1].
RewardBreakdown compute_reward(const NetSnapshot& prev, const NetSnapshot& cur,
                               const RewardWeights& w, double e_init);

struct StepResult {
    double reward = 0.0;
    std::uint8_t cont = 1;
    RewardBreakdown breakdown;
};

// Advances the network one step under `action` (desired CH flags, dead nodes
// forced off): apply flags, assign clusters, pay energy, move, rebuild the
// topology, and score the transition. cont is 0 exactly when the resulting
// connectivity ratio drops below 0.5.
StepResult simulate_step(NetSnapshot& s, const std::vector<std::uint8_t>& action,
                         const ScenarioConfig& sc, Rng& rng);

}  // namespace gwm::sim
