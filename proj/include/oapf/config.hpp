#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "oapf/filters.hpp"
#include "oapf/models.hpp"

namespace oapf {

enum class TrajectoryMode { SimulatePerRun, FixedFile };

struct FilterConfig {
  /// Column label in the emitted CSVs; defaults to the filter name.
  std::string label;
  FilterSettings settings;
};

/// One experiment manifest. See README.md for the JSON schema.
struct ExperimentConfig {
  std::string name = "experiment";
  std::shared_ptr<const ModelSpec> model;
  int steps = 100;
  int n_runs = 1;
  std::uint64_t master_seed = 0;
  std::vector<FilterConfig> filters;
  /// Summary metrics to report; empty means every metric the model supports.
  std::vector<std::string> outputs;
  TrajectoryMode trajectory_mode = TrajectoryMode::SimulatePerRun;
  std::filesystem::path trajectory_file;
};

/// Metric names understood by summarize().
const std::vector<std::string>& known_metrics();

/// Builds a model from its JSON description. Matrices accept a number (s I),
/// a flat array (diagonal) or a nested array (full); vectors accept a number
/// (constant) or an array. Throws ConfigError.
ModelSpec parse_model(const nlohmann::json& j);

/// Validates and converts a parsed manifest. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);

/// Applies "dotted.key=value" to a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise. Array elements are addressed
/// by index ("filters.0.M=50").
void apply_override(nlohmann::json& j, const std::string& assignment);

nlohmann::json read_json_file(const std::filesystem::path& path);

/// read_json_file + apply_override for each assignment + parse_config.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace oapf
