#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mlocrisk/experiments.hpp"

namespace mlocrisk {

/**
 * Flat JSON config: keys overlay default_config(kind). Keys starting with '_'
 * are ignored so a manifest can be fed back as a config. Unknown keys, wrong
 * types and invalid values throw ConfigError naming the field and, when the
 * text is available, its line.
 */
ExperimentConfig parse_config(std::string_view text, ExperimentKind kind,
                              std::string_view source_name = "config");
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind);

/// Resolved config plus provenance, as written to manifest.json.
std::string manifest_json(const ExperimentConfig& cfg);

}  // namespace mlocrisk
