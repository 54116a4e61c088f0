#include "autocenet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace autocenet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& text) {
    N value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    return value;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
    ConfigFile cfg;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
        const auto key = trim(t.substr(0, eq));
        const auto value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (cfg.contains(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void ConfigFile::set(const std::string& key, const std::string& value) { values_[key] = value; }

const std::string* ConfigFile::find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    return v ? parse_number<double>(key, *v) : fallback;
}

long long ConfigFile::get_int(const std::string& key, long long fallback) const {
    const auto* v = find(key);
    return v ? parse_number<long long>(key, *v) : fallback;
}

std::size_t ConfigFile::get_size(const std::string& key, std::size_t fallback) const {
    const auto* v = find(key);
    return v ? parse_number<std::size_t>(key, *v) : fallback;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<double> ConfigFile::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(parse_number<double>(key, item));
    return out;
}

std::vector<std::size_t> ConfigFile::get_sizes(const std::string& key,
                                               const std::vector<std::size_t>& fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    std::vector<std::size_t> out;
    for (const auto& item : split_list(*v)) out.push_back(parse_number<std::size_t>(key, item));
    return out;
}

std::vector<std::string> ConfigFile::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!used_.count(k)) out.push_back(k);
    }
    return out;
}

}  // namespace autocenet
