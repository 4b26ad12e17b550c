#include "gwm/data/trajectory.hpp"

#include <stdexcept>
#include <thread>

#include "gwm/baselines/baselines.hpp"
#include "gwm/errors.hpp"
#include "gwm/sim/sim.hpp"

namespace gwm::data {

void Episode::push_state(const sim::NetSnapshot& s) {
    for (const auto& node : s.nodes) {
        pos.push_back(node.pos[0]);
        pos.push_back(node.pos[1]);
        vel.push_back(node.vel[0]);
        vel.push_back(node.vel[1]);
        waypoint.push_back(node.waypoint[0]);
        waypoint.push_back(node.waypoint[1]);
        energy.push_back(node.energy);
        pause.push_back(node.pause_left);
        cluster.push_back(node.cluster);
        ch.push_back(node.ch ? 1 : 0);
        alive.push_back(node.alive ? 1 : 0);
    }
}

void Episode::push_transition(const std::vector<std::uint8_t>& act, double rew,
                              std::uint8_t c) {
    action.insert(action.end(), act.begin(), act.end());
    reward.push_back(rew);
    cont.push_back(c);
    ++steps;
}

sim::NetSnapshot Episode::snapshot(std::int32_t t, const sim::ChannelParams& chp) const {
    if (t < 0 || t > steps) throw std::out_of_range("Episode::snapshot: bad frame index");
    sim::NetSnapshot s;
    s.n = n;
    s.nodes.resize(n);
    std::size_t base = static_cast<std::size_t>(t) * n;
    for (std::int32_t i = 0; i < n; ++i) {
        sim::NodeState& node = s.nodes[i];
        node.pos[0] = pos[(base + i) * 2];
        node.pos[1] = pos[(base + i) * 2 + 1];
        node.vel[0] = vel[(base + i) * 2];
        node.vel[1] = vel[(base + i) * 2 + 1];
        node.waypoint[0] = waypoint[(base + i) * 2];
        node.waypoint[1] = waypoint[(base + i) * 2 + 1];
        node.energy = energy[base + i];
        node.pause_left = pause[base + i];
        node.cluster = cluster[base + i];
        node.ch = ch[base + i] != 0;
        node.alive = alive[base + i] != 0;
    }
    sim::build_adjacency(s, chp);
    return s;
}

bool Episode::operator==(const Episode& other) const {
    return scenario == other.scenario && policy == other.policy && seed == other.seed &&
           n == other.n && steps == other.steps && pos == other.pos && vel == other.vel &&
           waypoint == other.waypoint && energy == other.energy && pause == other.pause &&
           cluster == other.cluster && ch == other.ch && alive == other.alive &&
           action == other.action && reward == other.reward && cont == other.cont;
}

std::int64_t Dataset::total_transitions() const {
    std::int64_t total = 0;
    for (const auto& ep : episodes) total += ep.steps;
    return total;
}

bool Dataset::operator==(const Dataset& other) const {
    return schema == other.schema && n == other.n && seed_base == other.seed_base &&
           episodes == other.episodes;
}

Episode run_episode(const sim::ScenarioConfig& sc, const std::string& policy_name,
                    std::uint64_t seed) {
    auto policy = baselines::make_policy(policy_name);
    Rng rng(seed);
    sim::NetSnapshot s = sim::init_episode(sc, rng);
    policy->reset(sc, rng);

    Episode ep;
    ep.scenario = sc.name;
    ep.policy = policy_name;
    ep.seed = seed;
    ep.n = sc.n;
    ep.push_state(s);
    for (std::int32_t t = 0; t < sc.horizon; ++t) {
        auto act = policy->select(s, rng);
        // Record the applied flags: dead nodes are forced off.
        for (std::int32_t i = 0; i < sc.n; ++i) {
            act[i] = (s.nodes[i].alive && act[i]) ? 1 : 0;
        }
        auto res = sim::simulate_step(s, act, sc, rng);
        ep.push_transition(act, res.reward, res.cont);
        ep.push_state(s);
        if (res.cont == 0) break;
    }
    return ep;
}

Dataset collect_dataset(const CollectOptions& opt) {
    if (opt.scenarios.empty()) throw ConfigError("collect: no scenarios given");
    if (opt.policies.empty()) throw ConfigError("collect: no policies given");
    if (opt.episodes <= 0) throw ConfigError("collect: episodes must be positive");
    std::int32_t n = opt.scenarios.front().n;
    for (const auto& sc : opt.scenarios) {
        if (sc.n != n) throw ConfigError("collect: scenarios must share one node count");
    }

    Dataset ds;
    ds.n = n;
    ds.seed_base = opt.seed_base;
    ds.episodes.resize(opt.episodes);

    auto run_range = [&](std::int32_t begin, std::int32_t end) {
        for (std::int32_t i = begin; i < end; ++i) {
            const auto& sc = opt.scenarios[i % opt.scenarios.size()];
            const auto& pol =
                opt.policies[(i / opt.scenarios.size()) % opt.policies.size()];
            ds.episodes[i] = run_episode(sc, pol, opt.seed_base + i);
        }
    };

    int workers = std::max(1, opt.workers);
    if (workers == 1) {
        run_range(0, opt.episodes);
    } else {
        std::vector<std::thread> threads;
        std::int32_t chunk = (opt.episodes + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            std::int32_t begin = w * chunk;
            std::int32_t end = std::min<std::int32_t>(opt.episodes, begin + chunk);
            if (begin >= end) break;
            threads.emplace_back(run_range, begin, end);
        }
        for (auto& t : threads) t.join();
    }
    return ds;
}

}  // namespace gwm::data
