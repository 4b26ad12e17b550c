#include "gwm/sim/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace gwm::sim {

double received_power(const ChannelParams& ch, double d) {
    if (d < 0.0) throw std::invalid_argument("received_power: negative distance");
    double eff = d < ch.d0 ? ch.d0 : d;
    return ch.k0 * ch.pt * std::pow(ch.d0 / eff, ch.eta);
}

double capture_radius(const ChannelParams& ch) {
    return ch.d0 * std::pow(ch.k0 * ch.pt / ch.gamma_rx, 1.0 / ch.eta);
}

double node_distance(const NetSnapshot& s, std::int32_t i, std::int32_t j) {
    double dx = s.nodes[i].pos[0] - s.nodes[j].pos[0];
    double dy = s.nodes[i].pos[1] - s.nodes[j].pos[1];
    return std::sqrt(dx * dx + dy * dy);
}

void build_adjacency(NetSnapshot& s, const ChannelParams& ch) {
    const std::int32_t n = s.n;
    s.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
    s.power.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t j = i + 1; j < n; ++j) {
            double p = received_power(ch, node_distance(s, i, j));
            std::size_t ij = static_cast<std::size_t>(i) * n + j;
            std::size_t ji = static_cast<std::size_t>(j) * n + i;
            s.power[ij] = p;
            s.power[ji] = p;
            std::uint8_t edge =
                (p >= ch.gamma_rx && s.nodes[i].alive && s.nodes[j].alive) ? 1 : 0;
            s.adjacency[ij] = edge;
            s.adjacency[ji] = edge;
        }
    }
}

namespace {

void draw_waypoint(NodeState& node, const ScenarioConfig& sc, Rng& rng) {
    node.waypoint[0] = rng.uniform(0.0, sc.area);
    node.waypoint[1] = rng.uniform(0.0, sc.area);
    double speed = rng.uniform(sc.mobility.speed_min, sc.mobility.speed_max);
    double dx = node.waypoint[0] - node.pos[0];
    double dy = node.waypoint[1] - node.pos[1];
    double dist = std::sqrt(dx * dx + dy * dy);
    if (speed <= 0.0 || dist <= 0.0) {
        node.vel[0] = 0.0;
        node.vel[1] = 0.0;
    } else {
        node.vel[0] = speed * dx / dist;
        node.vel[1] = speed * dy / dist;
    }
}

void kill_node(NodeState& node) {
    node.alive = false;
    node.ch = false;
    node.cluster = -1;
    node.vel[0] = 0.0;
    node.vel[1] = 0.0;
}

}  // namespace

NetSnapshot init_episode(const ScenarioConfig& sc, Rng& rng) {
    if (sc.n <= 0) throw std::invalid_argument("init_episode: n must be positive");
    NetSnapshot s;
    s.n = sc.n;
    s.nodes.resize(sc.n);
    for (auto& node : s.nodes) {
        node.pos[0] = rng.uniform(0.0, sc.area);
        node.pos[1] = rng.uniform(0.0, sc.area);
        node.energy = sc.energy.e_init;
        node.alive = true;
        node.ch = false;
        node.cluster = -1;
        node.pause_left = 0;
        draw_waypoint(node, sc, rng);
    }
    build_adjacency(s, sc.channel);
    return s;
}

void assign_clusters(NetSnapshot& s) {
    const std::int32_t n = s.n;
    for (std::int32_t i = 0; i < n; ++i) {
        NodeState& node = s.nodes[i];
        if (!node.alive) {
            node.cluster = -1;
            continue;
        }
        if (node.ch) {
            node.cluster = i;
            continue;
        }
        std::int32_t best = -1;
        double best_power = 0.0;
        for (std::int32_t j = 0; j < n; ++j) {
            if (!s.adj(i, j) || !s.nodes[j].ch || !s.nodes[j].alive) continue;
            double p = s.pwr(i, j);
            if (best < 0 || p > best_power) {
                best = j;
                best_power = p;
            }
        }
        node.cluster = best;
    }
}

void step_energy(NetSnapshot& s, const EnergyParams& ep) {
    const std::int32_t n = s.n;
    std::vector<std::int32_t> member_count(n, 0);
    for (std::int32_t i = 0; i < n; ++i) {
        const NodeState& node = s.nodes[i];
        if (node.alive && !node.ch && node.cluster >= 0) {
            ++member_count[node.cluster];
        }
    }
    for (std::int32_t i = 0; i < n; ++i) {
        NodeState& node = s.nodes[i];
        if (!node.alive) continue;
        double cost = ep.e_idle * ep.dt;
        if (node.ch) {
            cost += ep.e_ch_overhead * member_count[i] * ep.dt;
        } else if (node.cluster >= 0) {
            double d = node_distance(s, i, node.cluster);
            cost += (ep.e_elec + ep.eps_amp * d * d) * ep.dt;
        }
        node.energy -= cost;
        if (node.energy < 0.0) node.energy = 0.0;
        if (node.energy <= ep.e_death) kill_node(node);
    }
}

void step_mobility(NetSnapshot& s, const ScenarioConfig& sc, Rng& rng) {
    for (auto& node : s.nodes) {
        if (!node.alive) continue;
        if (node.pause_left > 0) {
            --node.pause_left;
            if (node.pause_left == 0) draw_waypoint(node, sc, rng);
            continue;
        }
        double speed = std::sqrt(node.vel[0] * node.vel[0] + node.vel[1] * node.vel[1]);
        if (speed <= 0.0) continue;
        double dx = node.waypoint[0] - node.pos[0];
        double dy = node.waypoint[1] - node.pos[1];
        double dist = std::sqrt(dx * dx + dy * dy);
        double step_len = speed * sc.energy.dt;
        if (dist <= step_len) {
            node.pos[0] = node.waypoint[0];
            node.pos[1] = node.waypoint[1];
            if (sc.mobility.pause > 0) {
                node.pause_left = sc.mobility.pause;
                node.vel[0] = 0.0;
                node.vel[1] = 0.0;
            } else {
                draw_waypoint(node, sc, rng);
            }
        } else {
            node.pos[0] += node.vel[0] * sc.energy.dt;
            node.pos[1] += node.vel[1] * sc.energy.dt;
        }
        if (node.pos[0] < 0.0) node.pos[0] = 0.0;
        if (node.pos[0] > sc.area) node.pos[0] = sc.area;
        if (node.pos[1] < 0.0) node.pos[1] = 0.0;
        if (node.pos[1] > sc.area) node.pos[1] = sc.area;
    }
}

double connectivity_ratio(const NetSnapshot& s) {
    std::int32_t alive = 0;
    std::int32_t connected = 0;
    for (std::int32_t i = 0; i < s.n; ++i) {
        if (!s.nodes[i].alive) continue;
        ++alive;
        if (s.nodes[i].ch) {
            ++connected;
            continue;
        }
        for (std::int32_t j = 0; j < s.n; ++j) {
            if (s.adj(i, j) && s.nodes[j].alive && s.nodes[j].ch) {
                ++connected;
                break;
            }
        }
    }
    return alive == 0 ? 0.0 : static_cast<double>(connected) / alive;
}

RewardBreakdown compute_reward(const NetSnapshot& prev, const NetSnapshot& cur,
                               const RewardWeights& w, double e_init) {
    RewardBreakdown out;
    const std::int32_t n = cur.n;

    std::int32_t alive = 0;
    std::int32_t n_ch = 0;
    std::int32_t members = 0;
    std::int32_t members_stable = 0;
    std::int32_t unclustered = 0;
    std::int32_t flips = 0;
    double energy_sum = 0.0;

    for (std::int32_t i = 0; i < n; ++i) {
        const NodeState& c = cur.nodes[i];
        const NodeState& p = prev.nodes[i];
        if (c.ch != p.ch) ++flips;
        if (!c.alive) continue;
        ++alive;
        energy_sum += c.energy;
        if (c.ch) {
            ++n_ch;
        } else {
            ++members;
            if (c.cluster == p.cluster) ++members_stable;
            if (c.cluster < 0) ++unclustered;
        }
    }

    out.stability = members == 0 ? 1.0 : static_cast<double>(members_stable) / members;
    out.connectivity = connectivity_ratio(cur);
    out.temporal = -static_cast<double>(flips) / n;

    if (alive > 0) {
        double target = std::sqrt(static_cast<double>(alive));
        double miss = std::abs(static_cast<double>(n_ch) - target) / target;
        out.ch_count = 1.0 - std::min(1.0, miss);
        out.energy = energy_sum / (alive * e_init);
    }
    double u = alive == 0 ? 1.0 : static_cast<double>(unclustered) / alive;
    out.penalty = u > w.theta ? 1.0 : 0.0;

    out.total = w.w_stab * out.stability + w.w_energy * out.energy +
                w.w_conn * out.connectivity + w.w_ch * out.ch_count +
                w.w_temp * out.temporal - w.w_penalty * out.penalty;
    return out;
}

StepResult simulate_step(NetSnapshot& s, const std::vector<std::uint8_t>& action,
                         const ScenarioConfig& sc, Rng& rng) {
    if (static_cast<std::int32_t>(action.size()) != s.n) {
        throw std::invalid_argument("simulate_step: action size mismatch");
    }
    NetSnapshot prev = s;
    for (std::int32_t i = 0; i < s.n; ++i) {
        s.nodes[i].ch = s.nodes[i].alive && action[i] != 0;
    }
    assign_clusters(s);
    step_energy(s, sc.energy);
    step_mobility(s, sc, rng);
    build_adjacency(s, sc.channel);

    StepResult result;
    result.breakdown = compute_reward(prev, s, sc.reward, sc.energy.e_init);
    result.reward = result.breakdown.total;
    result.cont = connectivity_ratio(s) >= 0.5 ? 1 : 0;
    return result;
}

}  // namespace gwm::sim
