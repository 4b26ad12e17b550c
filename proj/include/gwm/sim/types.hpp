#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gwm::sim {

// Log-distance path loss: received power at distance d is
// k0 * pt * (d0 / max(d, d0))^eta, and a link exists when that power clears
// gamma_rx and both endpoints are alive.
struct ChannelParams {
    double k0 = 1.0;
    double pt = 1.0;
    double d0 = 1.0;
    double eta = 3.0;
    double gamma_rx = 6.4e-8;
};

struct EnergyParams {
    double e_init = 100.0;
    double e_elec = 0.02;
    double eps_amp = 4e-7;
    double e_idle = 0.005;
    double e_ch_overhead = 0.01;
    double e_death = 0.5;
    double dt = 1.0;
};

struct RewardWeights {
    double w_stab = 0.2;
    double w_energy = 0.25;
    double w_conn = 0.3;
    double w_ch = 0.15;
    double w_temp = 0.1;
    double w_penalty = 0.5;
    double theta = 0.2;
};

struct MobilityParams {
    double speed_min = 1.0;
    double speed_max = 5.0;
    std::int32_t pause = 0;
};

struct ScenarioConfig {
    std::string name = "default";
    std::string category = "MANET";
    std::int32_t n = 50;
    double area = 1000.0;
    std::int32_t horizon = 501;
    ChannelParams channel;
    EnergyParams energy;
    RewardWeights reward;
    MobilityParams mobility;
};

struct NodeState {
    double pos[2] = {0.0, 0.0};
    double vel[2] = {0.0, 0.0};
    double waypoint[2] = {0.0, 0.0};
    double energy = 0.0;
    bool ch = false;
    bool alive = true;
    std::int32_t cluster = -1;      // index of the owning CH, -1 when unclustered
    std::int32_t pause_left = 0;    // mobility-internal rest counter
};

// Full network state. adjacency and power are n*n row-major; power holds the
// pure channel quantity for every ordered pair (diagonal zero), adjacency
// additionally requires both endpoints alive.
struct NetSnapshot {
    std::int32_t n = 0;
    std::vector<NodeState> nodes;
    std::vector<std::uint8_t> adjacency;
    std::vector<double> power;

    bool adj(std::int32_t i, std::int32_t j) const {
        return adjacency[static_cast<std::size_t>(i) * n + j] != 0;
    }
    double pwr(std::int32_t i, std::int32_t j) const {
        return power[static_cast<std::size_t>(i) * n + j];
    }
};

}  // namespace gwm::sim
