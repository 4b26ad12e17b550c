#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwm/rng.hpp"
#include "gwm/sim/types.hpp"

namespace gwm::data {

// One recorded episode. State arrays hold steps+1 frames (initial state plus
// one per transition); action/reward/cont hold one row per transition.
// Adjacency and received power are not stored: they are recomputed from
// positions and alive flags, which reproduces them bit-for-bit.
struct Episode {
    std::string scenario;
    std::string policy;
    std::uint64_t seed = 0;
    std::int32_t n = 0;
    std::int32_t steps = 0;

    std::vector<double> pos;        // (steps+1) * n * 2
    std::vector<double> vel;        // (steps+1) * n * 2
    std::vector<double> waypoint;   // (steps+1) * n * 2
    std::vector<double> energy;     // (steps+1) * n
    std::vector<std::int32_t> pause;    // (steps+1) * n
    std::vector<std::int32_t> cluster;  // (steps+1) * n
    std::vector<std::uint8_t> ch;       // (steps+1) * n
    std::vector<std::uint8_t> alive;    // (steps+1) * n

    std::vector<std::uint8_t> action;  // steps * n
    std::vector<double> reward;        // steps
    std::vector<std::uint8_t> cont;    // steps

    void push_state(const sim::NetSnapshot& s);
    void push_transition(const std::vector<std::uint8_t>& act, double rew, std::uint8_t c);

    // Materializes frame t (0..steps) including the rebuilt topology.
    sim::NetSnapshot snapshot(std::int32_t t, const sim::ChannelParams& chp) const;

    bool operator==(const Episode& other) const;
};

struct Dataset {
    std::int32_t schema = 1;
    std::int32_t n = 0;
    std::uint64_t seed_base = 0;
    std::vector<Episode> episodes;

    std::int64_t total_transitions() const;
    bool operator==(const Dataset& other) const;
};

struct CollectOptions {
    std::vector<sim::ScenarioConfig> scenarios;  // episode i uses scenarios[i % size]
    std::vector<std::string> policies;           // cycled after a full scenario round
    std::int32_t episodes = 1;
    std::uint64_t seed_base = 0;
    int workers = 1;
};

// Runs episodes under the configured scenario/policy mix. Episode i is fully
// determined by seed_base + i, so the result is identical for any worker
// count.
Dataset collect_dataset(const CollectOptions& opt);

// Records one episode under the given policy name ("random", "wca", ...).
Episode run_episode(const sim::ScenarioConfig& sc, const std::string& policy_name,
                    std::uint64_t seed);

}  // namespace gwm::data
