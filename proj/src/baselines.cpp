#include "gwm/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "gwm/errors.hpp"
#include "gwm/sim/sim.hpp"

namespace gwm::baselines {

std::vector<std::uint8_t> lowest_id_select(const sim::NetSnapshot& s) {
    const std::int32_t n = s.n;
    std::vector<std::uint8_t> ch(n, 0);
    std::vector<std::uint8_t> decided(n, 0);
    for (std::int32_t i = 0; i < n; ++i) {
        if (!s.nodes[i].alive || decided[i]) continue;
        ch[i] = 1;
        decided[i] = 1;
        for (std::int32_t j = 0; j < n; ++j) {
            if (s.adj(i, j) && s.nodes[j].alive) decided[j] = 1;
        }
    }
    return ch;
}

std::vector<std::uint8_t> wca_select(const sim::NetSnapshot& s, const WcaParams& p,
                                     const std::vector<double>& cum_ch_steps) {
    const std::int32_t n = s.n;
    double ideal = p.ideal_degree > 0.0 ? p.ideal_degree : std::sqrt(static_cast<double>(n));

    std::vector<double> weight(n, 0.0);
    for (std::int32_t i = 0; i < n; ++i) {
        if (!s.nodes[i].alive) continue;
        std::int32_t degree = 0;
        double dist_sum = 0.0;
        for (std::int32_t j = 0; j < n; ++j) {
            if (s.adj(i, j) && s.nodes[j].alive) {
                ++degree;
                dist_sum += sim::node_distance(s, i, j);
            }
        }
        double speed = std::sqrt(s.nodes[i].vel[0] * s.nodes[i].vel[0] +
                                 s.nodes[i].vel[1] * s.nodes[i].vel[1]);
        weight[i] = p.c1 * std::abs(degree - ideal) + p.c2 * dist_sum + p.c3 * speed +
                    p.c4 * cum_ch_steps[i];
    }

    std::vector<std::uint8_t> ch(n, 0);
    std::vector<std::uint8_t> decided(n, 0);
    for (std::int32_t i = 0; i < n; ++i) {
        if (!s.nodes[i].alive) decided[i] = 1;
    }
    for (;;) {
        std::int32_t best = -1;
        for (std::int32_t i = 0; i < n; ++i) {
            if (decided[i]) continue;
            if (best < 0 || weight[i] < weight[best]) best = i;
        }
        if (best < 0) break;
        ch[best] = 1;
        decided[best] = 1;
        for (std::int32_t j = 0; j < n; ++j) {
            if (s.adj(best, j) && s.nodes[j].alive) decided[j] = 1;
        }
    }
    return ch;
}

std::vector<std::uint8_t> heed_select(const sim::NetSnapshot& s, const HeedParams& p,
                                      double e_init, Rng& rng) {
    const std::int32_t n = s.n;
    enum : std::uint8_t { kUndecided = 0, kTentative = 1, kFinal = 2 };
    std::vector<std::uint8_t> status(n, kUndecided);
    std::vector<double> prob(n, 0.0);
    for (std::int32_t i = 0; i < n; ++i) {
        if (!s.nodes[i].alive) continue;
        prob[i] = std::clamp(p.c_prob * s.nodes[i].energy / e_init, p.p_min, 1.0);
    }

    auto covered_by = [&](std::int32_t i, std::uint8_t min_status) {
        if (status[i] >= min_status) return true;
        for (std::int32_t j = 0; j < n; ++j) {
            if (s.adj(i, j) && s.nodes[j].alive && status[j] >= min_status) return true;
        }
        return false;
    };

    for (int it = 0; it < p.max_iter; ++it) {
        bool all_final_covered = true;
        for (std::int32_t i = 0; i < n; ++i) {
            if (s.nodes[i].alive && !covered_by(i, kFinal)) {
                all_final_covered = false;
                break;
            }
        }
        if (all_final_covered) break;

        std::vector<std::uint8_t> next = status;
        for (std::int32_t i = 0; i < n; ++i) {
            if (!s.nodes[i].alive || status[i] == kFinal) continue;
            if (covered_by(i, kFinal)) continue;
            if (prob[i] >= 1.0) {
                next[i] = kFinal;
            } else if (status[i] == kUndecided && !covered_by(i, kTentative) &&
                       rng.uniform() < prob[i]) {
                next[i] = kTentative;
            }
            prob[i] = std::min(1.0, 2.0 * prob[i]);
        }
        status = next;
    }

    for (std::int32_t i = 0; i < n; ++i) {
        if (s.nodes[i].alive && !covered_by(i, kFinal)) status[i] = kFinal;
    }

    std::vector<std::uint8_t> ch(n, 0);
    for (std::int32_t i = 0; i < n; ++i) ch[i] = status[i] == kFinal ? 1 : 0;
    return ch;
}

std::vector<std::uint8_t> dmac_select(const sim::NetSnapshot& s) {
    const std::int32_t n = s.n;
    std::vector<std::int32_t> order;
    order.reserve(n);
    for (std::int32_t i = 0; i < n; ++i) {
        if (s.nodes[i].alive) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        if (s.nodes[a].energy != s.nodes[b].energy) {
            return s.nodes[a].energy > s.nodes[b].energy;
        }
        return a < b;
    });

    std::vector<std::uint8_t> ch(n, 0);
    std::vector<std::uint8_t> decided(n, 0);
    for (std::int32_t i : order) {
        if (decided[i]) continue;
        ch[i] = 1;
        decided[i] = 1;
        for (std::int32_t j = 0; j < n; ++j) {
            if (s.adj(i, j) && s.nodes[j].alive) decided[j] = 1;
        }
    }
    return ch;
}

namespace {

class LowestIdPolicy final : public ClusterPolicy {
public:
    std::string name() const override { return "lowest_id"; }
    std::vector<std::uint8_t> select(const sim::NetSnapshot& s, Rng&) override {
        return lowest_id_select(s);
    }
};

class WcaPolicy final : public ClusterPolicy {
public:
    std::string name() const override { return "wca"; }
    void reset(const sim::ScenarioConfig& sc, Rng&) override {
        cum_ch_steps_.assign(sc.n, 0.0);
    }
    std::vector<std::uint8_t> select(const sim::NetSnapshot& s, Rng&) override {
        if (cum_ch_steps_.size() != static_cast<std::size_t>(s.n)) {
            cum_ch_steps_.assign(s.n, 0.0);
        }
        auto ch = wca_select(s, params_, cum_ch_steps_);
        for (std::int32_t i = 0; i < s.n; ++i) {
            if (ch[i]) cum_ch_steps_[i] += 1.0;
        }
        return ch;
    }

private:
    WcaParams params_;
    std::vector<double> cum_ch_steps_;
};

class LeachPolicy final : public ClusterPolicy {
public:
    std::string name() const override { return "leach"; }
    void reset(const sim::ScenarioConfig& sc, Rng&) override {
        double n = static_cast<double>(sc.n);
        p_ = std::sqrt(n) / n;
        epoch_len_ = std::max<std::int32_t>(1, static_cast<std::int32_t>(1.0 / p_));
        round_ = 0;
        served_.assign(sc.n, 0);
    }
    std::vector<std::uint8_t> select(const sim::NetSnapshot& s, Rng& rng) override {
        if (served_.size() != static_cast<std::size_t>(s.n)) {
            sim::ScenarioConfig tmp;
            tmp.n = s.n;
            Rng unused(0);
            reset(tmp, unused);
        }
        std::int32_t r = round_ % epoch_len_;
        if (r == 0) served_.assign(s.n, 0);
        std::vector<std::uint8_t> ch(s.n, 0);
        for (std::int32_t i = 0; i < s.n; ++i) {
            if (!s.nodes[i].alive || served_[i]) continue;
            double threshold = p_ / (1.0 - p_ * r);
            if (rng.uniform() < threshold) {
                ch[i] = 1;
                served_[i] = 1;
            }
        }
        ++round_;
        return ch;
    }

private:
    double p_ = 0.1;
    std::int32_t epoch_len_ = 10;
    std::int32_t round_ = 0;
    std::vector<std::uint8_t> served_;
};

class HeedPolicy final : public ClusterPolicy {
public:
    std::string name() const override { return "heed"; }
    void reset(const sim::ScenarioConfig& sc, Rng&) override { e_init_ = sc.energy.e_init; }
    std::vector<std::uint8_t> select(const sim::NetSnapshot& s, Rng& rng) override {
        return heed_select(s, params_, e_init_, rng);
    }

private:
    HeedParams params_;
    double e_init_ = 100.0;
};

class DmacPolicy final : public ClusterPolicy {
public:
    std::string name() const override { return "dmac"; }
    std::vector<std::uint8_t> select(const sim::NetSnapshot& s, Rng&) override {
        return dmac_select(s);
    }
};

// Per-episode CH probability drawn once, then i.i.d. flags per step. Used
// for dataset diversity, not as a serious baseline.
class RandomPolicy final : public ClusterPolicy {
public:
    std::string name() const override { return "random"; }
    void reset(const sim::ScenarioConfig&, Rng& rng) override {
        p_ = rng.uniform(0.05, 0.5);
    }
    std::vector<std::uint8_t> select(const sim::NetSnapshot& s, Rng& rng) override {
        std::vector<std::uint8_t> ch(s.n, 0);
        for (std::int32_t i = 0; i < s.n; ++i) {
            if (s.nodes[i].alive && rng.bernoulli(p_)) ch[i] = 1;
        }
        return ch;
    }

private:
    double p_ = 0.2;
};

}  // namespace

std::unique_ptr<ClusterPolicy> make_policy(const std::string& name) {
    if (name == "lowest_id") return std::make_unique<LowestIdPolicy>();
    if (name == "wca") return std::make_unique<WcaPolicy>();
    if (name == "leach") return std::make_unique<LeachPolicy>();
    if (name == "heed") return std::make_unique<HeedPolicy>();
    if (name == "dmac") return std::make_unique<DmacPolicy>();
    if (name == "random") return std::make_unique<RandomPolicy>();
    throw ConfigError("unknown policy '" + name + "'");
}

}  // namespace gwm::baselines
