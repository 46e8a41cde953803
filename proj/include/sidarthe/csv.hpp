#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sidarthe/errors.hpp"

namespace sidarthe {

/// A parsed delimited table: one header row plus data rows of equal width.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    char delimiter = ',';

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw parse_error("column not found: " + name);
    }

    bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

/// Pick ',' or ';' by which splits the header into more fields.
inline char detect_delimiter(const std::string& header_line) {
    std::size_t commas = 0, semis = 0;
    for (char c : header_line) {
        if (c == ',') ++commas;
        if (c == ';') ++semis;
    }
    return semis > commas ? ';' : ',';
}

} // namespace detail

/// Parse delimiter-separated text. The delimiter (comma or semicolon) is
/// detected from the header row. Blank lines are skipped; every data row
/// must match the header width (parse_error carries the 1-based row).
inline CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    CsvTable t;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        if (t.header.empty()) {
            t.delimiter = detail::detect_delimiter(line);
            t.header = detail::split_line(line, t.delimiter);
            continue;
        }
        auto fields = detail::split_line(line, t.delimiter);
        if (fields.size() != t.header.size())
            throw parse_error("expected " + std::to_string(t.header.size()) + " fields, got " +
                                  std::to_string(fields.size()),
                              row);
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw parse_error("empty table: no header row");
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw parse_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

/// Parse one cell as a number; blank means missing. `row` is 1-based for
/// error reporting.
inline std::optional<double> parse_cell(const std::string& cell, std::size_t row) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw parse_error("trailing characters in number: " + cell, row);
        return v;
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        throw parse_error("not a number: " + cell, row);
    }
}

/// Write a table with the given delimiter, '\n' line endings, no quoting
/// (cells must not contain the delimiter or newlines).
inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows, char delim = ',') {
    const auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << delim;
            out << fields[i];
        }
        out << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
}

} // namespace sidarthe
