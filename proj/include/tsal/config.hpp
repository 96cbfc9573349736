#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace tsal {

// Flat key=value configuration; `#` starts a comment. Command-line flags are
// merged over file values by the CLI.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap read_config_file(const std::string& path);
void merge_config(ConfigMap& base, const ConfigMap& overrides);

std::string config_get(const ConfigMap& config, const std::string& key,
                       const std::string& fallback);
int config_get_int(const ConfigMap& config, const std::string& key, int fallback);
double config_get_double(const ConfigMap& config, const std::string& key, double fallback);
bool config_get_bool(const ConfigMap& config, const std::string& key, bool fallback);

// FNV-1a over the sorted key=value serialization; hex string.
std::string config_hash(const ConfigMap& config);

// Shortest decimal form that parses back to exactly the same double.
std::string config_format_double(double value);

}  // namespace tsal
