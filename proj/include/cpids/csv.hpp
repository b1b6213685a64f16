#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cpids::csv {

// Minimal delimited-text table: header + string cells. Quoting is not part of
// the dataset format; fields are plain tokens separated by a single delimiter.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line per row

    std::optional<std::size_t> column(const std::string& name) const;
};

Table read_file(const std::string& path, char delim = ',');
Table read_stream(std::istream& in, char delim = ',');

void write_file(const std::string& path, const Table& t, char delim = ',');

bool is_missing(const std::string& cell);

// Numeric parsers return nullopt for missing cells and throw MalformedRow-style
// descriptions via out-of-band flags: callers attach line context.
std::optional<double> parse_double(const std::string& cell, bool& bad);
std::optional<std::int64_t> parse_int(const std::string& cell, bool& bad);

// Shortest round-trip text for a double (std::to_chars), so serialize-load
// cycles reproduce values exactly and reruns are byte-identical.
std::string format_double(double v);
std::string format_int(std::int64_t v);

// Atomic write: content goes to <path>.tmp and is renamed into place.
void write_text_atomic(const std::string& path, const std::string& content);

} // namespace cpids::csv
