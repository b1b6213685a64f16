#include "cpids/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpids/errors.hpp"

namespace cpids::csv {

std::optional<std::size_t> Table::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

static std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& cell : out) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ' || cell.back() == '\t'))
            cell.pop_back();
        std::size_t i = 0;
        while (i < cell.size() && (cell[i] == ' ' || cell[i] == '\t')) ++i;
        if (i > 0) cell.erase(0, i);
    }
    return out;
}

Table read_stream(std::istream& in, char delim) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line, delim);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(lineno);
    }
    if (!have_header) raise(errc::empty_file, "no header row");
    return t;
}

Table read_file(const std::string& path, char delim) {
    std::ifstream in(path);
    if (!in) raise(errc::io_error, "cannot open " + path);
    return read_stream(in, delim);
}

void write_file(const std::string& path, const Table& t, char delim) {
    std::ostringstream out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) out << delim;
        out << t.header[i];
    }
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << delim;
            out << row[i];
        }
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

bool is_missing(const std::string& cell) {
    if (cell.empty()) return true;
    std::string low;
    low.reserve(cell.size());
    for (char c : cell) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return low == "nan" || low == "na" || low == "null" || low == "none";
}

std::optional<double> parse_double(const std::string& cell, bool& bad) {
    bad = false;
    if (is_missing(cell)) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        bad = true;
        return std::nullopt;
    }
    return v;
}

std::optional<std::int64_t> parse_int(const std::string& cell, bool& bad) {
    bad = false;
    if (is_missing(cell)) return std::nullopt;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec == std::errc() && ptr == cell.data() + cell.size()) return v;
    // integer-valued floats ("502.0") bind too; anything else is malformed
    bool badf = false;
    auto dv = parse_double(cell, badf);
    if (badf || !dv) {
        bad = true;
        return std::nullopt;
    }
    double r = *dv;
    if (r != static_cast<double>(static_cast<std::int64_t>(r))) {
        bad = true;
        return std::nullopt;
    }
    return static_cast<std::int64_t>(r);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_int(std::int64_t v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(errc::io_error, "cannot write " + tmp.string());
        out << content;
        if (!out.flush()) raise(errc::io_error, "short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

} // namespace cpids::csv
