#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curvemvg/report.hpp"
#include "curvemvg/scene.hpp"

namespace curvemvg::scene {

struct RunFlags {
  std::optional<std::uint64_t> seed;   // overrides config seed
  std::optional<double> noise;         // overrides config noise_sigma
  std::optional<std::pair<int, int>> d_range;
  std::optional<std::pair<int, int>> m_range;
};

const std::vector<std::string>& command_names();

// Parses "lo..hi" or a single integer. Throws ConfigError.
std::pair<int, int> parse_range(const std::string& text, const std::string& key);

// Runs one command. Throws ConfigError for an unknown command or a scene
// that does not fit the command; other library errors become failed
// verdicts in the report.
Report execute(const std::string& command, const SceneConfig& config,
               const RunFlags& flags = {});

struct CliRequest {
  std::string command;
  std::optional<std::filesystem::path> config_path;
  RunFlags flags;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> csv_dir;
};

// Exit code 0 when every verdict passes, 1 on a failed verdict or runtime
// failure, 2 on a malformed config (no report is written).
int run(const CliRequest& request);

}  // namespace curvemvg::scene
