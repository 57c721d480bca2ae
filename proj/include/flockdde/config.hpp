#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flockdde/simulation.hpp"

namespace flockdde {

inline constexpr int kSchemaVersion = 1;

/// Malformed or invalid configuration. `where` is "line L, column C" for
/// syntax errors and the JSON path of the offending field otherwise.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string where, const std::string& message)
        : std::runtime_error(where + ": " + message), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

  private:
    std::string where_;
};

struct OutputPaths {
    std::optional<std::filesystem::path> frames;
    std::optional<std::filesystem::path> summary;
    std::optional<std::filesystem::path> snapshot;
};

struct RunConfig {
    SimulationConfig sim;
    std::uint64_t seed = 0;
    OutputPaths output;
};

struct SweepAxis {
    /// Dotted path into the run config, e.g. "kernel.beta" or "datum.velocity.scale".
    std::string path;
    std::vector<nlohmann::json> values;
};

struct SweepConfig {
    nlohmann::json base;
    std::vector<SweepAxis> axes;
    unsigned max_workers = 1;
    std::size_t max_cells = 1024;
    std::filesystem::path output_dir = "sweep";
};

/// Parses JSON text, reporting syntax errors by line and column.
nlohmann::json parse_json_text(const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);

RunConfig parse_run_config(const nlohmann::json& doc);
SweepConfig parse_sweep_config(const nlohmann::json& doc);

/// Sets the value at a dotted path, creating intermediate objects.
void set_by_path(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
nlohmann::json preset(const std::string& name);

} // namespace flockdde
