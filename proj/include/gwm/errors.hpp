#pragma once

#include <stdexcept>
#include <string>

namespace gwm {

// Error categories map one-to-one onto CLI exit codes so callers can script
// against failures.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// File container problems, each reported distinctly.
struct VersionMismatchError : IoError {
    explicit VersionMismatchError(const std::string& what) : IoError(what) {}
};

struct TruncatedFileError : IoError {
    explicit TruncatedFileError(const std::string& what) : IoError(what) {}
};

struct ChecksumError : IoError {
    explicit ChecksumError(const std::string& what) : IoError(what) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

namespace exit_code {
constexpr int ok = 0;
constexpr int other = 1;
constexpr int config = 2;
constexpr int io = 3;
constexpr int divergence = 4;
}  // namespace exit_code

}  // namespace gwm
