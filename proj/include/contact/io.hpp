#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace contact {
namespace io {

/// Shortest round-trip decimal form via std::to_chars: locale-independent
/// and byte-stable across runs, which the CSV/JSON outputs promise.
std::string format_double(double v);

/// "lo:hi:step" inclusive of both endpoints (within half-step slack).
std::vector<double> parse_range(const std::string& text);

/// Comma-separated CSV with a header row, '.' decimals, LF line endings.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);

    void write_row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_;
};

std::string cell(double v);
std::string cell(std::uint64_t v);
std::string cell(const std::string& v);
std::string cell(bool v);

/// Sidecar manifest `<file>.manifest.json`: the canonical config, the seed,
/// and version stamps, so every table can be regenerated exactly.
void write_manifest(const std::string& output_path, const std::string& command,
                    const nlohmann::json& canonical_config);

} // namespace io
} // namespace contact
