#pragma once

#include <cstdint>
#include <vector>

#include "gwm/data/trajectory.hpp"
#include "gwm/rng.hpp"

namespace gwm::data {

struct SequenceRef {
    std::int32_t episode = 0;
    std::int32_t offset = 0;
};

// Uniform sampler over all (episode, offset) windows of seq_len consecutive
// snapshots. A window at offset o covers snapshots [o, o + seq_len) plus the
// transitions between them; episodes with fewer than seq_len snapshots
// contribute nothing.
class BatchSampler {
public:
    BatchSampler(const Dataset& ds, std::int32_t seq_len);

    std::int64_t num_windows() const { return total_windows_; }
    std::int32_t seq_len() const { return seq_len_; }

    std::vector<SequenceRef> sample(std::int32_t batch_size, Rng& rng) const;

private:
    struct EpisodeWindows {
        std::int32_t episode;
        std::int64_t cumulative;  // windows in episodes up to and including this one
    };
    std::vector<EpisodeWindows> index_;
    std::int32_t seq_len_;
    std::int64_t total_windows_ = 0;
};

}  // namespace gwm::data
