#pragma once

#include <cstdint>
#include <string>

#include "gwm/config.hpp"
#include "gwm/nn/param.hpp"

namespace gwm::nn {

struct CheckpointInfo {
    Config metadata;
    std::int64_t adam_t = 0;
    bool has_optimizer_state = false;
};

// Versioned binary container for a ParamStore. The metadata config travels
// with the weights so a loader can rebuild the exact architecture before
// filling it. Loading matches parameters by name and requires identical
// shapes.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const Config& metadata, std::int64_t adam_t,
                     bool include_optimizer_state);

CheckpointInfo load_checkpoint(const std::string& path, ParamStore& store);

// Reads only the metadata config, for architecture discovery.
Config read_checkpoint_metadata(const std::string& path);

}  // namespace gwm::nn
