#pragma once

#include "ccomp/compressor_map.hpp"
#include "ccomp/plant.hpp"
#include "ccomp/simkit.hpp"

#include <filesystem>
#include <string>

namespace ccomp {

// JSON documents; // and /* */ comments are accepted. All errors surface as ConfigError.

PlantParams parse_params(const std::string& text);
PlantParams load_params(const std::filesystem::path& path);

CompressorMap parse_map(const std::string& text);
CompressorMap load_map(const std::filesystem::path& path);
std::string map_to_json(const CompressorMap& map);

/// Relative paths inside the scenario (map, params, output_dir) resolve against base_dir.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace ccomp
