#pragma once

#include "corgs/trainer.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace corgs::cli {

/// Flat `key = value` text; `#` starts a comment. Throws
/// std::invalid_argument naming the line on malformed input.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Applies one key to the config. Unknown keys and unparsable values throw
/// std::invalid_argument.
void apply_config_entry(TrainConfig& config, CoRegHooks& hooks, const std::string& key, const std::string& value);

/// Every recognised key with its current value, in a fixed order.
std::map<std::string, std::string> config_snapshot(const TrainConfig& config, const CoRegHooks& hooks);

}  // namespace corgs::cli
