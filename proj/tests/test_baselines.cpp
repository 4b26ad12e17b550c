#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gwm/baselines/baselines.hpp"
#include "gwm/errors.hpp"
#include "gwm/rng.hpp"
#include "gwm/sim/scenario.hpp"
#include "gwm/sim/sim.hpp"

using namespace gwm;
using namespace gwm::baselines;
using namespace gwm::sim;

namespace {

NetSnapshot snapshot_at(const std::vector<std::array<double, 2>>& pos, double energy = 100.0) {
    ChannelParams ch;
    NetSnapshot s;
    s.n = static_cast<std::int32_t>(pos.size());
    s.nodes.resize(s.n);
    for (std::int32_t i = 0; i < s.n; ++i) {
        s.nodes[i].pos[0] = pos[i][0];
        s.nodes[i].pos[1] = pos[i][1];
        s.nodes[i].energy = energy;
        s.nodes[i].alive = true;
    }
    build_adjacency(s, ch);
    return s;
}

bool covered(const NetSnapshot& s, const std::vector<std::uint8_t>& ch) {
    for (std::int32_t i = 0; i < s.n; ++i) {
        if (!s.nodes[i].alive) continue;
        if (ch[i]) continue;
        bool ok = false;
        for (std::int32_t j = 0; j < s.n; ++j) {
            if (s.adj(i, j) && ch[j]) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("lowest id elects the smallest index per neighborhood") {
    // Fully connected triple: only the first node leads.
    auto s = snapshot_at({{0, 0}, {50, 0}, {0, 50}});
    CHECK(lowest_id_select(s) == std::vector<std::uint8_t>{1, 0, 0});

    // Chain 0-1-2 with the ends out of range of each other.
    auto chain = snapshot_at({{0, 0}, {200, 0}, {400, 0}});
    CHECK(lowest_id_select(chain) == std::vector<std::uint8_t>{1, 0, 1});

    // Components elect independently.
    auto comps = snapshot_at({{0, 0}, {50, 0}, {5000, 0}, {5050, 0}});
    CHECK(lowest_id_select(comps) == std::vector<std::uint8_t>{1, 0, 1, 0});

    // Dead nodes neither lead nor block.
    auto dead = snapshot_at({{0, 0}, {50, 0}});
    dead.nodes[0].alive = false;
    build_adjacency(dead, ChannelParams{});
    CHECK(lowest_id_select(dead) == std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("wca promotes the lightest node and absorbs its neighborhood") {
    WcaParams p;

    // Chain 0-1-2; service history makes the middle node strictly lightest.
    auto chain = snapshot_at({{0, 0}, {200, 0}, {400, 0}});
    std::vector<double> cum{5000.0, 0.0, 5000.0};
    CHECK(wca_select(chain, p, cum) == std::vector<std::uint8_t>{0, 1, 0});

    // Triangle with equal degrees and no motion: distance sums decide, and
    // the node with the smallest sum covers everyone.
    auto tri = snapshot_at({{0, 0}, {100, 0}, {50, 20}});
    std::vector<double> zero(3, 0.0);
    // Sums: node0 = 100+53.85, node1 = 100+53.85, node2 = 53.85+53.85.
    CHECK(wca_select(tri, p, zero) == std::vector<std::uint8_t>{0, 0, 1});

    // An isolated node is forced to lead itself.
    auto iso = snapshot_at({{0, 0}, {5000, 0}, {5050, 0}});
    std::vector<double> zero3(3, 0.0);
    auto ch = wca_select(iso, p, zero3);
    CHECK(ch[0] == 1);
    CHECK(covered(iso, ch));

    // Relabeling nodes relabels the selection when no ties are in play;
    // distinct speeds keep isolated nodes from tying on weight.
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::array<double, 2>> pos(10);
        for (auto& q : pos) q = {rng.uniform(0, 500), rng.uniform(0, 500)};
        auto s = snapshot_at(pos);
        for (std::int32_t i = 0; i < 10; ++i) s.nodes[i].vel[0] = 1.0 + i;
        std::vector<double> none(10, 0.0);
        auto base = wca_select(s, p, none);

        std::vector<std::int32_t> perm(10);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::int32_t i = 9; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
        NetSnapshot ps;
        ps.n = 10;
        ps.nodes.resize(10);
        for (std::int32_t i = 0; i < 10; ++i) ps.nodes[perm[i]] = s.nodes[i];
        build_adjacency(ps, ChannelParams{});
        auto permuted = wca_select(ps, p, none);
        for (std::int32_t i = 0; i < 10; ++i) CHECK(permuted[perm[i]] == base[i]);
    }
}

TEST_CASE("leach rotates service within an epoch") {
    // n = 100 gives p = 0.1 and a 10-round epoch.
    ScenarioConfig sc = find_scenario("default");
    sc.n = 100;
    std::vector<std::array<double, 2>> pos(100);
    Rng place(8);
    for (auto& q : pos) q = {place.uniform(0, 1000), place.uniform(0, 1000)};
    auto s = snapshot_at(pos);

    auto policy = make_policy("leach");

    // Within one epoch nobody serves twice.
    Rng rng(55);
    policy->reset(sc, rng);
    std::vector<int> served_in_epoch(100, 0);
    for (int round = 0; round < 10; ++round) {
        auto ch = policy->select(s, rng);
        for (int i = 0; i < 100; ++i) {
            if (ch[i]) {
                ++served_in_epoch[i];
                CHECK(served_in_epoch[i] <= 1);
            }
        }
    }

    // Round-1 CH count concentrates near n*p over seeds.
    double total = 0.0;
    for (int seed = 0; seed < 60; ++seed) {
        Rng r(1000 + seed);
        policy->reset(sc, r);
        auto ch = policy->select(s, r);
        total += std::accumulate(ch.begin(), ch.end(), 0);
    }
    double mean = total / 60.0;
    CHECK(mean > 7.0);
    CHECK(mean < 13.0);

    // A fresh epoch restores eligibility: over two epochs somebody serves twice.
    Rng r2(77);
    policy->reset(sc, r2);
    std::vector<int> lifetime_count(100, 0);
    bool repeat = false;
    for (int round = 0; round < 20; ++round) {
        auto ch = policy->select(s, r2);
        for (int i = 0; i < 100; ++i) {
            if (ch[i] && ++lifetime_count[i] == 2) repeat = true;
        }
    }
    CHECK(repeat);
}

TEST_CASE("heed finalizes high-energy nodes and covers stragglers") {
    HeedParams hp;

    // Isolated node self-elects by fallback at the latest.
    auto iso = snapshot_at({{0, 0}});
    Rng r0(3);
    CHECK(heed_select(iso, hp, 100.0, r0) == std::vector<std::uint8_t>{1});

    // Adjacent pair with 10:1 energy ratio: the rich node always leads, the
    // poor node can never reach probability one first.
    auto pair = snapshot_at({{0, 0}, {50, 0}});
    pair.nodes[1].energy = 10.0;
    int rich = 0, poor = 0;
    for (int trial = 0; trial < 300; ++trial) {
        Rng r(9000 + trial);
        auto ch = heed_select(pair, hp, 100.0, r);
        rich += ch[0];
        poor += ch[1];
    }
    CHECK(rich == 300);
    CHECK(poor == 0);

    // c_prob = 1 with full energy finalizes everyone in the first iteration.
    HeedParams all_in;
    all_in.c_prob = 1.0;
    auto trio = snapshot_at({{0, 0}, {50, 0}, {0, 50}});
    Rng r1(4);
    CHECK(heed_select(trio, all_in, 100.0, r1) == std::vector<std::uint8_t>{1, 1, 1});

    // Same seed, same outcome.
    Rng ra(42), rb(42);
    std::vector<std::array<double, 2>> pos(30);
    Rng place(6);
    for (auto& q : pos) q = {place.uniform(0, 800), place.uniform(0, 800)};
    auto s = snapshot_at(pos);
    CHECK(heed_select(s, hp, 100.0, ra) == heed_select(s, hp, 100.0, rb));
}

TEST_CASE("dmac crowns maximal residual energy with index ties") {
    // Chain with energies 1, 9, 2, 8 elects nodes 1 and 3.
    auto chain = snapshot_at({{0, 0}, {200, 0}, {400, 0}, {600, 0}});
    chain.nodes[0].energy = 1.0;
    chain.nodes[1].energy = 9.0;
    chain.nodes[2].energy = 2.0;
    chain.nodes[3].energy = 8.0;
    CHECK(dmac_select(chain) == std::vector<std::uint8_t>{0, 1, 0, 1});

    // Equal energies degenerate to lowest-index election.
    auto flat = snapshot_at({{0, 0}, {200, 0}, {400, 0}, {600, 0}});
    CHECK(dmac_select(flat) == lowest_id_select(flat));

    // Permutation consistency with distinct energies.
    Rng rng(88);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::array<double, 2>> pos(12);
        for (auto& q : pos) q = {rng.uniform(0, 600), rng.uniform(0, 600)};
        auto s = snapshot_at(pos);
        for (std::int32_t i = 0; i < 12; ++i) s.nodes[i].energy = 10.0 + i + rng.uniform();

        auto base = dmac_select(s);
        std::vector<std::int32_t> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::int32_t i = 11; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
        NetSnapshot ps;
        ps.n = 12;
        ps.nodes.resize(12);
        for (std::int32_t i = 0; i < 12; ++i) ps.nodes[perm[i]] = s.nodes[i];
        build_adjacency(ps, ChannelParams{});
        auto permuted = dmac_select(ps);
        for (std::int32_t i = 0; i < 12; ++i) CHECK(permuted[perm[i]] == base[i]);
    }
}

TEST_CASE("coverage guarantee holds for the covering baselines") {
    ScenarioConfig sc = find_scenario("default");
    sc.n = 40;
    for (const char* name : {"lowest_id", "wca", "heed", "dmac"}) {
        auto policy = make_policy(name);
        for (int episode = 0; episode < 3; ++episode) {
            Rng rng(500 + episode);
            auto s = init_episode(sc, rng);
            policy->reset(sc, rng);
            for (int t = 0; t < 30; ++t) {
                auto ch = policy->select(s, rng);
                INFO(name, " episode ", episode, " step ", t);
                CHECK(covered(s, ch));
                for (std::int32_t i = 0; i < sc.n; ++i) {
                    if (!s.nodes[i].alive) CHECK(ch[i] == 0);
                }
                simulate_step(s, ch, sc, rng);
            }
        }
    }
}

TEST_CASE("policies are deterministic under a fixed seed") {
    ScenarioConfig sc = find_scenario("default");
    sc.n = 30;
    for (const char* name : {"lowest_id", "wca", "leach", "heed", "dmac", "random"}) {
        auto p1 = make_policy(name);
        auto p2 = make_policy(name);
        Rng r1(123), r2(123);
        auto s1 = init_episode(sc, r1);
        auto s2 = init_episode(sc, r2);
        p1->reset(sc, r1);
        p2->reset(sc, r2);
        for (int t = 0; t < 20; ++t) {
            auto a1 = p1->select(s1, r1);
            auto a2 = p2->select(s2, r2);
            INFO(name, " step ", t);
            CHECK(a1 == a2);
            simulate_step(s1, a1, sc, r1);
            simulate_step(s2, a2, sc, r2);
        }
    }
    CHECK_THROWS_AS(make_policy("unknown"), ConfigError);
}
