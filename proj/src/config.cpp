#include "tsal/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tsal/errors.hpp"

namespace tsal {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    ConfigMap config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("config: " + path + " line " + std::to_string(line_no) +
                              ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw FormatError("config: " + path + " line " + std::to_string(line_no) +
                              ": empty key");
        config[key] = value;
    }
    return config;
}

void merge_config(ConfigMap& base, const ConfigMap& overrides) {
    for (const auto& [key, value] : overrides) base[key] = value;
}

std::string config_get(const ConfigMap& config, const std::string& key,
                       const std::string& fallback) {
    auto it = config.find(key);
    return it == config.end() ? fallback : it->second;
}

int config_get_int(const ConfigMap& config, const std::string& key, int fallback) {
    auto it = config.find(key);
    if (it == config.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + "=" + it->second + " is not an integer");
    }
}

double config_get_double(const ConfigMap& config, const std::string& key, double fallback) {
    auto it = config.find(key);
    if (it == config.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + "=" + it->second + " is not a number");
    }
}

bool config_get_bool(const ConfigMap& config, const std::string& key, bool fallback) {
    auto it = config.find(key);
    if (it == config.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config: " + key + "=" + it->second + " is not a boolean");
}

std::string config_hash(const ConfigMap& config) {
    std::uint64_t hash = 14695981039346656037ULL;
    auto feed = [&hash](const std::string& s) {
        for (unsigned char c : s) {
            hash ^= c;
            hash *= 1099511628211ULL;
        }
    };
    for (const auto& [key, value] : config) {
        feed(key);
        feed("=");
        feed(value);
        feed("\n");
    }
    std::ostringstream os;
    os << std::hex << hash;
    return os.str();
}

std::string config_format_double(double value) {
    std::array<char, 32> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

}  // namespace tsal
