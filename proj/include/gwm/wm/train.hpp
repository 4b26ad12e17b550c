#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gwm/data/batch.hpp"
#include "gwm/data/trajectory.hpp"
#include "gwm/wm/features.hpp"
#include "gwm/wm/model.hpp"

namespace gwm::wm {

// One aligned step of a window batch. Rows stack the lanes: row = lane * n +
// node. Edges are block-diagonal across lanes so one encoder call covers the
// whole batch step.
struct StepTargets {
    std::vector<double> feat;          // rows * kNodeFeatures
    nn::GraphEdges edges;
    nn::RowGroups groups;              // every lane's rows; dead nodes stay in,
                                       // only pooling and the losses mask them
    std::vector<std::uint8_t> alive;   // rows
    std::vector<double> a_prev;        // rows, previous CH bit
    std::vector<double> pos_t;         // rows * 2, symlog meters
    std::vector<double> energy_t;      // rows, symlog energy
    std::vector<std::uint8_t> adj_t;   // lanes * n * n, i<j entries used
    std::vector<std::uint8_t> pair_m;  // lanes * n * n, both endpoints alive
    std::vector<double> reward_t;      // lanes, symlog reward
    std::vector<std::uint8_t> cont_t;  // lanes
    std::vector<std::uint8_t> rc_m;    // lanes, 0 where no prior transition exists
};

struct WindowBatch {
    std::int32_t lanes = 0;
    std::int32_t n = 0;
    std::vector<StepTargets> steps;
    // Mask totals, kept separate from the tensors so a batch split into
    // accumulation chunks can still normalize by the full-batch counts.
    std::int64_t alive_rows = 0;
    std::int64_t pair_count = 0;
    std::int64_t rc_count = 0;
};

WindowBatch build_window_batch(const data::Dataset& ds,
                               const std::map<std::string, sim::ScenarioConfig>& scenarios,
                               const std::vector<data::SequenceRef>& refs,
                               std::int32_t seq_len);

// Reciprocal mask totals used to turn per-element penalties into means.
struct LossDenoms {
    double inv_alive = 0.0;
    double inv_pairs = 0.0;
    double inv_rc = 0.0;
};

LossDenoms denoms_for(std::int64_t alive_rows, std::int64_t pair_count,
                      std::int64_t rc_count);

struct WmLoss {
    double pos = 0.0;
    double energy = 0.0;
    double adj = 0.0;
    double reward = 0.0;
    double cont = 0.0;
    double kl = 0.0;     // free-bits clamped mean, before the beta weight
    double total = 0.0;  // pos + energy + adj_weight*adj + reward + cont + beta*kl
    double recon = 0.0;  // pos + energy + adj_weight*adj
    std::int64_t cont_correct = 0;
    std::int64_t cont_total = 0;

    WmLoss& operator+=(const WmLoss& o);
};

struct UnrollOptions {
    LatentMode mode = LatentMode::kSample;
    bool train = true;      // dropout active
    bool backward = false;  // accumulate parameter gradients
    double beta = 1.0;
    double free_bits = 0.1;
    double adj_weight = 0.1;
};

// Posterior unroll over one window batch: encode each snapshot, advance the
// dynamics on recorded actions, take the posterior latent, decode, and score
// every head. With opt.backward the full backward pass runs and parameter
// gradients accumulate in the model's store. Throws DivergenceError naming
// the first non-finite component.
WmLoss unroll_window_batch(const WorldModel& model, const WindowBatch& batch,
                           const LossDenoms& denoms, const UnrollOptions& opt,
                           Rng& rng);

struct WmTrainConfig {
    WmConfig model;
    std::int32_t epochs = 100;
    std::int32_t batch_size = 32;
    std::int32_t seq_len = 50;
    std::int32_t chunk_lanes = 8;      // gradient accumulation granularity
    std::int32_t batches_per_epoch = 0;  // 0 derives one data pass
    double lr = 3e-4;
    double grad_clip = 100.0;
    double beta = 1.0;
    double free_bits = 0.1;
    std::uint64_t seed = 0;
    std::string out_dir;  // empty disables checkpoints and the CSV log
};

struct WmEpochStats {
    std::int32_t epoch = 0;
    WmLoss loss;        // mean over the epoch's batches
    double grad_norm = 0.0;  // mean pre-clip global norm
};

struct WmTrainResult {
    std::vector<WmEpochStats> history;
    std::string checkpoint_path;  // empty when out_dir is empty
    std::string log_path;
};

// Offline world-model training. Scenario lookup must cover every scenario
// name in the dataset; the overload resolves names through the catalog.
WmTrainResult train_wm(WorldModel& model, const data::Dataset& ds,
                       const std::map<std::string, sim::ScenarioConfig>& scenarios,
                       const WmTrainConfig& cfg);
WmTrainResult train_wm(WorldModel& model, const data::Dataset& ds,
                       const WmTrainConfig& cfg);

}  // namespace gwm::wm
