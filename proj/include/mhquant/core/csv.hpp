#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "mhquant/errors.hpp"

namespace mhquant::core::csv {

/// Splits one CSV line on commas. The formats used here never quote fields,
/// so this is a plain split; surrounding whitespace is trimmed per field.
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string field = comma == std::string::npos
                                ? line.substr(start)
                                : line.substr(start, comma - start);
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

/// Parses a numeric cell. Empty cells mean "missing" and yield nullopt;
/// anything else must be a full, valid floating-point literal.
inline std::optional<double> parse_cell(const std::string& field, int line_no,
                                        const std::string& column) {
    if (field.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw MalformedRowError(line_no, "column '" + column + "': not a number: '" + field + "'");
    return value;
}

/// Shortest representation that round-trips exactly through from_chars.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

/// Joins fields with commas. Fields must not contain commas or newlines.
inline std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += fields[i];
    }
    return out;
}

}  // namespace mhquant::core::csv
