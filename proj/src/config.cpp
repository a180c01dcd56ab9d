#include "hetlink/config.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/text.hpp"

#include <fstream>
#include <sstream>

namespace hetlink {

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        auto key = trim(body.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg.values_[std::string(key)] = std::string(trim(body.substr(eq + 1)));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const std::string* Config::find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    read_.insert(key);
    return &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    double out = 0;
    if (!parse_double(*v, out)) throw ConfigError("config key '" + key + "': not a number: " + *v);
    return out;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    long long out = 0;
    if (!parse_int(*v, out)) throw ConfigError("config key '" + key + "': not an integer: " + *v);
    return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config key '" + key + "': not a boolean: " + *v);
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!read_.count(k)) out.push_back(k);
    }
    return out;
}

std::string Config::to_string() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

} // namespace hetlink
