#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace ccgeom {

inline const char* kVersion = "0.1.0";

// Report envelope shared by all CLI subcommands: inputs echo, seed,
// tolerances and results are filled by the caller; the timestamp is the only
// field allowed to differ between identical runs.
nlohmann::json report_envelope(const std::string& subcommand);

// Serializes with sorted keys and a trailing newline; "-" writes to stdout.
void write_report(const nlohmann::json& j, const std::string& path);

}  // namespace ccgeom
