#include "gwm/data/batch.hpp"

#include "gwm/errors.hpp"

namespace gwm::data {

BatchSampler::BatchSampler(const Dataset& ds, std::int32_t seq_len) : seq_len_(seq_len) {
    if (seq_len <= 0) throw ConfigError("batch: seq_len must be positive");
    for (std::int32_t e = 0; e < static_cast<std::int32_t>(ds.episodes.size()); ++e) {
        std::int32_t snapshots = ds.episodes[e].steps + 1;
        std::int32_t windows = snapshots - seq_len + 1;
        if (windows <= 0) continue;
        total_windows_ += windows;
        index_.push_back({e, total_windows_});
    }
    if (total_windows_ == 0) {
        throw ConfigError("batch: no episode has at least seq_len snapshots");
    }
}

std::vector<SequenceRef> BatchSampler::sample(std::int32_t batch_size, Rng& rng) const {
    std::vector<SequenceRef> out;
    out.reserve(batch_size);
    for (std::int32_t b = 0; b < batch_size; ++b) {
        std::int64_t pick =
            static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(total_windows_)));
        std::size_t lo = 0, hi = index_.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (pick < index_[mid].cumulative) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        std::int64_t before = lo == 0 ? 0 : index_[lo - 1].cumulative;
        out.push_back({index_[lo].episode, static_cast<std::int32_t>(pick - before)});
    }
    return out;
}

}  // namespace gwm::data
