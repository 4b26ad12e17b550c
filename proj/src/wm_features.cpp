#include "gwm/wm/features.hpp"

#include <cmath>

#include "gwm/sim/scenario.hpp"
#include "gwm/sim/sim.hpp"

namespace gwm::wm {

void node_features(const sim::NetSnapshot& s, const sim::ScenarioConfig& sc, double* out) {
    double inv_area = 1.0 / sc.area;
    double inv_speed = 1.0 / sc.mobility.speed_max;
    double inv_energy = 1.0 / sc.energy.e_init;
    double inv_deg = 1.0 / std::max<std::int32_t>(1, s.n - 1);
    double inv_n = 1.0 / s.n;
    for (std::int32_t i = 0; i < s.n; ++i) {
        const sim::NodeState& node = s.nodes[i];
        std::int32_t degree = 0;
        for (std::int32_t j = 0; j < s.n; ++j) {
            if (s.adj(i, j)) ++degree;
        }
        double* f = out + static_cast<std::size_t>(i) * kNodeFeatures;
        f[0] = node.pos[0] * inv_area;
        f[1] = node.pos[1] * inv_area;
        f[2] = node.vel[0] * inv_speed;
        f[3] = node.vel[1] * inv_speed;
        f[4] = node.energy * inv_energy;
        f[5] = degree * inv_deg;
        f[6] = node.ch ? 1.0 : 0.0;
        f[7] = node.alive ? 1.0 : 0.0;
        f[8] = node.cluster * inv_n;
    }
}

void append_edges(const sim::NetSnapshot& s, const sim::ScenarioConfig& sc,
                  std::int32_t row_base, nn::GraphEdges& edges) {
    if (edges.dst_ptr.empty()) edges.dst_ptr.push_back(0);
    double inv_gamma = 1.0 / sc.channel.gamma_rx;
    for (std::int32_t i = 0; i < s.n; ++i) {
        edges.src.push_back(row_base + i);
        edges.feat.push_back(0.0);
        for (std::int32_t j = 0; j < s.n; ++j) {
            if (j == i || !s.adj(i, j)) continue;
            edges.src.push_back(row_base + j);
            edges.feat.push_back(std::log10(s.pwr(i, j) * inv_gamma));
        }
        edges.dst_ptr.push_back(edges.src.size());
    }
}

std::map<std::string, sim::ScenarioConfig> resolve_scenarios(const data::Dataset& ds) {
    std::map<std::string, sim::ScenarioConfig> out;
    for (const auto& ep : ds.episodes) {
        if (out.count(ep.scenario) == 0) {
            out.emplace(ep.scenario, sim::load_scenario(ep.scenario));
        }
    }
    return out;
}

}  // namespace gwm::wm
