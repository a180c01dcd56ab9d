#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hetlink {

/// Flat key=value configuration. Blank lines and lines starting with '#' are ignored.
/// Typed getters throw ConfigError on malformed values.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text);
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Keys that were never read through a getter.
    std::vector<std::string> unused_keys() const;

    /// Deterministic key=value rendering, sorted by key.
    std::string to_string() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    const std::string* find(const std::string& key) const;

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> read_;
};

} // namespace hetlink
