#include "contact/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>

#include "contact/errors.hpp"
#include "contact/version.hpp"

namespace contact {
namespace io {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<double> parse_range(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw UsageError("range must look like lo:hi:step, got: " + text);
    double lo, hi, step;
    try {
        lo = std::stod(text.substr(0, c1));
        hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        step = std::stod(text.substr(c2 + 1));
    } catch (const std::logic_error&) {
        throw UsageError("malformed range: " + text);
    }
    if (!(step > 0.0) || hi < lo) throw UsageError("range needs step > 0 and hi >= lo: " + text);
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    std::vector<double> values;
    values.reserve(count);
    for (std::size_t k = 0; k < count; ++k) values.push_back(lo + static_cast<double>(k) * step);
    return values;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    out_.open(path, std::ios::binary); // binary keeps LF endings everywhere
    if (!out_) throw UsageError("cannot open output file: " + path);
    write_row(columns);
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw UsageError("CSV row width mismatch in " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw NumericalError("write failed: " + path_);
}

std::string cell(double v) { return format_double(v); }
std::string cell(std::uint64_t v) { return std::to_string(v); }
std::string cell(const std::string& v) { return v; }
std::string cell(bool v) { return v ? "1" : "0"; }

void write_manifest(const std::string& output_path, const std::string& command,
                    const nlohmann::json& canonical_config) {
    nlohmann::json m;
    m["command"] = command;
    m["config"] = canonical_config;
    if (canonical_config.contains("seed")) m["seed"] = canonical_config["seed"];
    m["versions"] = {{"contactsim", kVersion}, {"format", 1}};
    std::ofstream out(output_path + ".manifest.json", std::ios::binary);
    if (!out) throw UsageError("cannot open manifest for: " + output_path);
    out << m.dump(2) << '\n';
}

} // namespace io
} // namespace contact
