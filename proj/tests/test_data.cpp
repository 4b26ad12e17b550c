#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "gwm/baselines/baselines.hpp"
#include "gwm/data/batch.hpp"
#include "gwm/data/storage.hpp"
#include "gwm/data/trajectory.hpp"
#include "gwm/errors.hpp"
#include "gwm/rng.hpp"
#include "gwm/sim/scenario.hpp"
#include "gwm/sim/sim.hpp"

using namespace gwm;
using namespace gwm::data;
using namespace gwm::sim;

namespace {

ScenarioConfig tiny_scenario(const std::string& name, std::int32_t n = 8,
                             std::int32_t horizon = 30) {
    ScenarioConfig sc;
    sc.name = name;
    sc.n = n;
    sc.horizon = horizon;
    return sc;
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "gwm_data_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Dataset small_dataset() {
    CollectOptions opt;
    opt.scenarios = {tiny_scenario("tiny_a"), tiny_scenario("tiny_b", 8, 20)};
    opt.policies = {"lowest_id", "random"};
    opt.episodes = 5;
    opt.seed_base = 42;
    return collect_dataset(opt);
}

}  // namespace

TEST_CASE("recorded episodes have consistent shapes") {
    auto sc = tiny_scenario("shape", 6, 15);
    Episode ep = run_episode(sc, "wca", 7);

    CHECK(ep.n == 6);
    CHECK(ep.steps == 15);
    CHECK(ep.scenario == "shape");
    CHECK(ep.policy == "wca");
    CHECK(ep.seed == 7);

    std::size_t frames = static_cast<std::size_t>(ep.steps) + 1;
    CHECK(ep.pos.size() == frames * 6 * 2);
    CHECK(ep.vel.size() == frames * 6 * 2);
    CHECK(ep.waypoint.size() == frames * 6 * 2);
    CHECK(ep.energy.size() == frames * 6);
    CHECK(ep.pause.size() == frames * 6);
    CHECK(ep.cluster.size() == frames * 6);
    CHECK(ep.ch.size() == frames * 6);
    CHECK(ep.alive.size() == frames * 6);
    CHECK(ep.action.size() == static_cast<std::size_t>(ep.steps) * 6);
    CHECK(ep.reward.size() == static_cast<std::size_t>(ep.steps));
    CHECK(ep.cont.size() == static_cast<std::size_t>(ep.steps));
}

TEST_CASE("initial frame has no clusters and full energy") {
    auto sc = tiny_scenario("init", 6, 5);
    Episode ep = run_episode(sc, "lowest_id", 3);
    for (std::int32_t i = 0; i < 6; ++i) {
        CHECK(ep.ch[i] == 0);
        CHECK(ep.cluster[i] == -1);
        CHECK(ep.alive[i] == 1);
        CHECK(ep.energy[i] == sc.energy.e_init);
        CHECK(ep.pos[i * 2] >= 0.0);
        CHECK(ep.pos[i * 2] <= sc.area);
    }
}

TEST_CASE("episode replay matches a fresh simulation") {
    // Re-running the recorded actions through the simulator from the stored
    // initial frame must reproduce every stored frame, reward, and flag.
    auto sc = tiny_scenario("replay", 6, 12);
    Episode ep = run_episode(sc, "wca", 11);

    Rng rng(ep.seed);
    NetSnapshot s = init_episode(sc, rng);
    auto policy = baselines::make_policy("wca");
    policy->reset(sc, rng);

    for (std::int32_t t = 0; t < ep.steps; ++t) {
        auto act = policy->select(s, rng);
        for (std::int32_t i = 0; i < sc.n; ++i) {
            act[i] = (s.nodes[i].alive && act[i]) ? 1 : 0;
            CHECK(act[i] == ep.action[static_cast<std::size_t>(t) * sc.n + i]);
        }
        auto res = simulate_step(s, act, sc, rng);
        CHECK(res.reward == ep.reward[t]);
        CHECK(res.cont == ep.cont[t]);
        std::size_t base = static_cast<std::size_t>(t + 1) * sc.n;
        for (std::int32_t i = 0; i < sc.n; ++i) {
            CHECK(s.nodes[i].pos[0] == ep.pos[(base + i) * 2]);
            CHECK(s.nodes[i].pos[1] == ep.pos[(base + i) * 2 + 1]);
            CHECK(s.nodes[i].energy == ep.energy[base + i]);
            CHECK((s.nodes[i].ch ? 1 : 0) == ep.ch[base + i]);
            CHECK((s.nodes[i].alive ? 1 : 0) == ep.alive[base + i]);
            CHECK(s.nodes[i].cluster == ep.cluster[base + i]);
        }
    }
}

TEST_CASE("snapshot rebuilds the topology stored frames imply") {
    auto sc = tiny_scenario("topo", 8, 10);
    Episode ep = run_episode(sc, "random", 5);

    for (std::int32_t t : {0, ep.steps / 2, ep.steps}) {
        NetSnapshot s = ep.snapshot(t, sc.channel);
        REQUIRE(s.n == 8);
        double r_c = capture_radius(sc.channel);
        for (std::int32_t i = 0; i < s.n; ++i) {
            for (std::int32_t j = 0; j < s.n; ++j) {
                if (i == j) {
                    CHECK_FALSE(s.adj(i, j));
                    continue;
                }
                double dx = s.nodes[i].pos[0] - s.nodes[j].pos[0];
                double dy = s.nodes[i].pos[1] - s.nodes[j].pos[1];
                double d = std::sqrt(dx * dx + dy * dy);
                bool expect = d <= r_c && s.nodes[i].alive && s.nodes[j].alive;
                CHECK(s.adj(i, j) == expect);
            }
        }
    }
    CHECK_THROWS_AS(ep.snapshot(-1, sc.channel), std::out_of_range);
    CHECK_THROWS_AS(ep.snapshot(ep.steps + 1, sc.channel), std::out_of_range);
}

TEST_CASE("sub-threshold initial energy ends the episode immediately") {
    // Every node starts below the death threshold, dies in the first step,
    // and the episode records exactly one terminal transition.
    auto sc = tiny_scenario("doomed", 6, 30);
    sc.energy.e_init = 0.3;
    Episode ep = run_episode(sc, "lowest_id", 1);
    CHECK(ep.steps == 1);
    CHECK(ep.cont[0] == 0);
    for (std::int32_t i = 0; i < 6; ++i) {
        CHECK(ep.alive[6 + i] == 0);
    }
}

TEST_CASE("terminal flags only appear on the last recorded step") {
    auto sc = tiny_scenario("drain", 8, 80);
    sc.energy.e_init = 1.2;
    sc.energy.e_idle = 0.05;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Episode ep = run_episode(sc, "random", seed);
        for (std::int32_t t = 0; t + 1 < ep.steps; ++t) {
            CHECK(ep.cont[t] == 1);
        }
        if (ep.steps < sc.horizon) CHECK(ep.cont[ep.steps - 1] == 0);

        // Recorded actions never mark a node that was dead when it acted.
        for (std::int32_t t = 0; t < ep.steps; ++t) {
            for (std::int32_t i = 0; i < ep.n; ++i) {
                std::size_t idx = static_cast<std::size_t>(t) * ep.n + i;
                if (ep.action[idx]) CHECK(ep.alive[idx] == 1);
            }
        }
    }
}

TEST_CASE("collection cycles scenarios then policies and seeds sequentially") {
    Dataset ds = small_dataset();
    REQUIRE(ds.episodes.size() == 5);
    CHECK(ds.n == 8);
    CHECK(ds.seed_base == 42);

    const char* want_scenario[]{"tiny_a", "tiny_b", "tiny_a", "tiny_b", "tiny_a"};
    const char* want_policy[]{"lowest_id", "lowest_id", "random", "random", "lowest_id"};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(ds.episodes[i].scenario == want_scenario[i]);
        CHECK(ds.episodes[i].policy == want_policy[i]);
        CHECK(ds.episodes[i].seed == 42 + i);
    }
    CHECK(ds.total_transitions() > 0);
}

TEST_CASE("collection is reproducible and worker independent") {
    CollectOptions opt;
    opt.scenarios = {tiny_scenario("tiny_a"), tiny_scenario("tiny_b", 8, 20)};
    opt.policies = {"lowest_id", "random"};
    opt.episodes = 7;
    opt.seed_base = 9;

    opt.workers = 1;
    Dataset serial = collect_dataset(opt);
    Dataset again = collect_dataset(opt);
    CHECK(serial == again);

    opt.workers = 3;
    Dataset parallel = collect_dataset(opt);
    CHECK(serial == parallel);
}

TEST_CASE("collection rejects inconsistent options") {
    CollectOptions opt;
    CHECK_THROWS_AS(collect_dataset(opt), ConfigError);

    opt.scenarios = {tiny_scenario("a", 8), tiny_scenario("b", 10)};
    opt.policies = {"random"};
    opt.episodes = 2;
    CHECK_THROWS_AS(collect_dataset(opt), ConfigError);
}

TEST_CASE("dataset container round trips exactly") {
    Dataset ds = small_dataset();
    auto path = temp_dir() / "roundtrip.gwmdata";
    save_dataset(ds, path.string());
    Dataset loaded = load_dataset(path.string());
    CHECK(loaded == ds);

    // The rebuilt topology is identical too, not just the stored arrays.
    ChannelParams chp;
    NetSnapshot a = ds.episodes[0].snapshot(3, chp);
    NetSnapshot b = loaded.episodes[0].snapshot(3, chp);
    CHECK(a.adjacency == b.adjacency);
    CHECK(a.power == b.power);

    std::filesystem::remove(path);
}

TEST_CASE("saving twice produces identical bytes") {
    Dataset ds = small_dataset();
    auto p1 = temp_dir() / "bytes1.gwmdata";
    auto p2 = temp_dir() / "bytes2.gwmdata";
    save_dataset(ds, p1.string());
    save_dataset(ds, p2.string());
    CHECK(slurp(p1) == slurp(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("loader reports distinct failure modes") {
    Dataset ds = small_dataset();
    auto dir = temp_dir();
    auto good = dir / "good.gwmdata";
    save_dataset(ds, good.string());
    auto bytes = slurp(good);
    REQUIRE(bytes.size() > 16);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_dataset((dir / "nope.gwmdata").string()), IoError);
    }
    SUBCASE("foreign file") {
        auto p = dir / "foreign.gwmdata";
        auto bad = bytes;
        bad[0] ^= 0xFF;
        spit(p, bad);
        CHECK_THROWS_AS(load_dataset(p.string()), IoError);
        std::filesystem::remove(p);
    }
    SUBCASE("future format version") {
        auto p = dir / "version.gwmdata";
        auto bad = bytes;
        bad[8] = 0xFE;
        spit(p, bad);
        CHECK_THROWS_AS(load_dataset(p.string()), VersionMismatchError);
        std::filesystem::remove(p);
    }
    SUBCASE("truncated header") {
        auto p = dir / "short.gwmdata";
        spit(p, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10));
        CHECK_THROWS_AS(load_dataset(p.string()), TruncatedFileError);
        std::filesystem::remove(p);
    }
    SUBCASE("flipped payload byte") {
        auto p = dir / "corrupt.gwmdata";
        auto bad = bytes;
        bad[bytes.size() / 2] ^= 0x01;
        spit(p, bad);
        CHECK_THROWS_AS(load_dataset(p.string()), ChecksumError);
        std::filesystem::remove(p);
    }
    std::filesystem::remove(good);
}

TEST_CASE("batch sampler covers exactly the valid windows") {
    Dataset ds;
    ds.n = 4;
    Episode a;
    a.steps = 9;  // 10 snapshots
    Episode b;
    b.steps = 2;  // 3 snapshots
    Episode c;
    c.steps = 0;  // 1 snapshot, too short for any window below
    ds.episodes = {a, b, c};

    BatchSampler sampler(ds, 3);
    CHECK(sampler.num_windows() == 9);  // 8 from a, 1 from b, 0 from c
    CHECK(sampler.seq_len() == 3);

    Rng rng(123);
    std::vector<std::vector<int>> hits(3);
    hits[0].resize(8, 0);
    hits[1].resize(1, 0);
    const int draws = 9000;
    auto refs = sampler.sample(draws, rng);
    REQUIRE(refs.size() == draws);
    for (const auto& ref : refs) {
        REQUIRE(ref.episode >= 0);
        REQUIRE(ref.episode < 2);  // episode 2 is never eligible
        REQUIRE(ref.offset >= 0);
        REQUIRE(ref.offset < static_cast<std::int32_t>(hits[ref.episode].size()));
        ++hits[ref.episode][ref.offset];
    }
    // Each of the 9 windows expects draws/9 = 1000 hits; 5 sigma is ~150.
    for (std::size_t e = 0; e < 2; ++e) {
        for (int count : hits[e]) {
            CHECK(count > 850);
            CHECK(count < 1150);
        }
    }
}

TEST_CASE("batch sampler edge cases") {
    Dataset ds;
    ds.n = 4;
    Episode a;
    a.steps = 4;  // 5 snapshots
    ds.episodes = {a};

    BatchSampler exact(ds, 5);
    CHECK(exact.num_windows() == 1);
    Rng rng(1);
    for (const auto& ref : exact.sample(32, rng)) {
        CHECK(ref.episode == 0);
        CHECK(ref.offset == 0);
    }

    CHECK_THROWS_AS(BatchSampler(ds, 6), ConfigError);
    CHECK_THROWS_AS(BatchSampler(ds, 0), ConfigError);
}
