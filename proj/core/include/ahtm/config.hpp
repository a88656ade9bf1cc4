#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ahtm/pipeline.hpp"

namespace ahtm {

/// Flat `key = value` settings with dotted keys (`sp.k = 20`). Blank lines
/// and `#` comments are ignored.
using Settings = std::map<std::string, std::string>;

/// Throws ValidationError listing every malformed line and every key given
/// twice with different values.
Settings parse_settings(std::string_view text, const std::string& origin = "<config>");
/// Throws IoError when the file cannot be read.
Settings load_settings(const std::string& path);

/// Applies settings on top of `cfg`. Unknown keys, bad values and
/// conflicting combinations are collected and reported together in one
/// ValidationError.
void apply_settings(PipelineConfig& cfg, const Settings& settings);

std::vector<std::string> known_config_keys();

/// Settings that reproduce `cfg`.
Settings to_settings(const PipelineConfig& cfg);

}  // namespace ahtm
