#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "flockdde/diagnostics.hpp"
#include "flockdde/ensemble.hpp"
#include "flockdde/threshold.hpp"

namespace flockdde {

inline constexpr const char* kFramesSchema = "# flockdde frames v1";
inline constexpr const char* kSnapshotSchema = "# flockdde snapshot v1";
inline constexpr const char* kSweepSchema = "# flockdde sweep v1";

/// 17 significant digits ("%.17g"); non-finite values print as inf, -inf, nan.
std::string format_double(double x);

/// Frames CSV with the schema comment and header. When `terminal_blowup` is
/// set, the last frame is marked with status "blowup".
std::string frames_csv(std::span<const DiagnosticsFrame> frames, bool terminal_blowup);

/// t, node_id, label..., pos..., vel..., mass, detJ for every node.
std::string snapshot_csv(const LagrangianEnsemble& e);

/// Finite numbers as numbers, infinities as the strings "inf"/"-inf", NaN as null.
nlohmann::json number_json(double x);
nlohmann::json certificate_json(const FlockingCertificate& c);
nlohmann::json verdict_json(const ThresholdVerdict& v);

/// Pretty-printed with a trailing newline.
std::string dump_json(const nlohmann::json& doc);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace flockdde
