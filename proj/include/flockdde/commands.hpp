#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flockdde/config.hpp"
#include "flockdde/simulation.hpp"

namespace flockdde {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 1;
inline constexpr int blowup = 2;
inline constexpr int not_satisfied = 3;
inline constexpr int unsupported = 4;
inline constexpr int indeterminate = 5;
} // namespace exit_code

/// Everything a run produces, rendered but not yet written.
struct RunOutcome {
    SimulationResult result;
    nlohmann::json summary;
    std::string frames_csv;
    std::optional<std::string> snapshot_csv;
    int exit_code = exit_code::ok;
};

/// Worker cap from FLOCKDDE_THREADS; nullopt when unset or not a positive integer.
std::optional<unsigned> thread_cap_from_env();

RunOutcome execute_run(const RunConfig& config);

/// Writes the outcome's files (frames, summary, optional snapshot) under the
/// configured paths, resolved against base_dir when relative.
void write_outcome(const RunOutcome& outcome, const OutputPaths& paths, const std::filesystem::path& base_dir);

/// Prehistory frames on [-tau, 0] of a config, as fed to the certificate.
std::vector<DiagnosticsFrame> prehistory_frames(const SimulationConfig& config);

int cmd_run(const nlohmann::json& doc, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);
int cmd_certify(const nlohmann::json& doc, std::ostream& out, std::ostream& err);
int cmd_threshold(const std::string& w0_min, const std::string& beta, const std::string& R_V, std::ostream& out,
                  std::ostream& err);
int cmd_sweep(const nlohmann::json& doc, std::ostream& out, std::ostream& err);
int cmd_presets(const std::optional<std::string>& name, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (without the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace flockdde
