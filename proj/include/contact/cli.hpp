#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace contact {
namespace cli {

/// Executes one subcommand. args excludes the program name. Returns the
/// process exit code: 0 success, 2 validation error, 3 numerical failure.
int run(const std::vector<std::string>& args);

/// Loads and canonicalizes a config file; the file must carry a "command"
/// key. Serializing the result with config_to_string reproduces the
/// canonical byte form exactly.
nlohmann::json load_config(const std::string& path);

/// Validates keys/types against the subcommand's schema, rejects unknown
/// keys, applies documented defaults, and returns the canonical (sorted,
/// fully populated) form including "command".
nlohmann::json canonicalize(const std::string& command, const nlohmann::json& raw);

/// Canonical serialization: two-space indent, sorted keys, trailing newline.
std::string config_to_string(const nlohmann::json& canonical);

} // namespace cli
} // namespace contact
