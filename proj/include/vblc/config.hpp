#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vblc/trainer.hpp"

namespace vblc {

inline constexpr const char* kArtifactVersion = "1.0.0";

// key=value lines, '#' comments. Unknown keys are rejected; the meta
// keys a run manifest carries (command, artifact_version, started_at,
// paths) are recognized and ignored, so a manifest can be fed back in
// as a config.
TrainConfig parse_config_text(const std::string& text);
TrainConfig parse_config_file(const std::filesystem::path& path);

// Every key materialized, fixed order, doubles at full precision.
std::string serialize_config(const TrainConfig& cfg);

// command + version + wall-clock start + the fully resolved config.
void write_run_manifest(const std::filesystem::path& path, const std::string& command,
                        const TrainConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& extras);

}  // namespace vblc
