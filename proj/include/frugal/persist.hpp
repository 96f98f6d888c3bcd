#pragma once

#include "frugal/alloop.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace frugal {

using Json = nlohmann::json;

/// Missing fields keep the values of `defaults`; unknown enum names and
/// out-of-range numbers raise InvalidConfig.
SessionConfig config_from_json(const Json& doc, const SessionConfig& defaults = {});
Json to_json(const SessionConfig& config);

Json to_json(const InvertibleNet& net);
InvertibleNet net_from_json(const Json& doc);

Json to_json(const MetricsHistory& metrics);

/// Full session state; doubles are written in shortest round-trip form, so
/// state_from_json(to_json(s)) reproduces every weight bit for bit.
Json to_json(const SessionState& state);
SessionState state_from_json(const Json& doc);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace frugal
