#pragma once

#include <string>

#include "gwm/data/trajectory.hpp"

namespace gwm::data {

// Binary dataset container: magic, format version, declared sizes, episode
// payloads, trailing crc32. Loading verifies each layer and reports version
// mismatch, truncation, and corruption as distinct errors.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace gwm::data
