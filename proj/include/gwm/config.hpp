#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gwm {

// Flat key/value configuration with dotted keys ("energy.e_idle"). Files are
// one "key = value" pair per line, '#' starts a comment, blank lines are
// ignored. Keys are unique; later assignments overwrite earlier ones.
class Config {
public:
    Config() = default;

    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& origin);

    // Applies one "key=value" override as given on the command line.
    void set_override(const std::string& spec);

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_int(const std::string& key, std::int64_t value);

    bool has(const std::string& key) const;

    // Typed getters throw ConfigError on missing keys or non-parseable
    // values; the defaulted forms fall back instead of throwing on absence.
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Keys in sorted order, for deterministic serialization.
    std::vector<std::string> keys() const;

    // Renders "key = value" lines sorted by key.
    std::string to_text() const;
    void write_file(const std::string& path) const;

    // Merges other into this, other winning on conflicts.
    void merge_from(const Config& other);

private:
    std::map<std::string, std::string> values_;
};

// Formats a double so that parsing it back returns the identical bits.
std::string format_double(double value);

}  // namespace gwm
