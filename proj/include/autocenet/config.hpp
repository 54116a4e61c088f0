#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "autocenet/errors.hpp"

namespace autocenet {

/// Flat key=value settings with dotted keys (`train.lr=0.001`). Blank lines
/// and lines starting with '#' are ignored; whitespace around keys and values
/// is trimmed. Later duplicates raise ConfigError.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool contains(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list.
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;

    /// Keys that were never read; a non-empty result usually means a typo.
    std::vector<std::string> unused_keys() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    const std::string* find(const std::string& key) const;

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace autocenet
