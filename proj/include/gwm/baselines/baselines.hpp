#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gwm/rng.hpp"
#include "gwm/sim/types.hpp"

namespace gwm::baselines {

// Per-step CH selection. Implementations are synchronous centralized
// equivalents of the distributed protocols; any per-episode memory lives in
// the policy object and is cleared by reset().
class ClusterPolicy {
public:
    virtual ~ClusterPolicy() = default;
    virtual std::string name() const = 0;
    virtual void reset(const sim::ScenarioConfig& sc, Rng& rng) {
        (void)sc;
        (void)rng;
    }
    virtual std::vector<std::uint8_t> select(const sim::NetSnapshot& s, Rng& rng) = 0;
};

// Greedy by ascending node index: an uncovered node becomes CH and covers
// its alive neighbors.
std::vector<std::uint8_t> lowest_id_select(const sim::NetSnapshot& s);

struct WcaParams {
    double c1 = 0.7;    // degree deviation from the ideal
    double c2 = 0.2;    // sum of distances to alive neighbors
    double c3 = 0.05;   // current speed
    double c4 = 0.05;   // cumulative CH service steps
    double ideal_degree = -1.0;  // <= 0 means sqrt(n)
};

// Combined-weight election: repeatedly promotes the lightest undecided node
// (ties by lower index) and absorbs its undecided neighbors.
std::vector<std::uint8_t> wca_select(const sim::NetSnapshot& s, const WcaParams& p,
                                     const std::vector<double>& cum_ch_steps);

struct HeedParams {
    double c_prob = 0.05;
    double p_min = 1e-4;
    int max_iter = 10;
};

// Energy-biased probabilistic election with per-iteration probability
// doubling, final promotion at probability 1, and self-election fallback for
// nodes left without a final CH in range.
std::vector<std::uint8_t> heed_select(const sim::NetSnapshot& s, const HeedParams& p,
                                      double e_init, Rng& rng);

// Highest residual energy wins its neighborhood, ties by lower index.
std::vector<std::uint8_t> dmac_select(const sim::NetSnapshot& s);

// Factory for the non-learned policies: lowest_id, wca, leach, heed, dmac,
// random. Throws ConfigError for unknown names.
std::unique_ptr<ClusterPolicy> make_policy(const std::string& name);

}  // namespace gwm::baselines
