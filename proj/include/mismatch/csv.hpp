#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mismatch/types.hpp"

// CSV plumbing shared by the command-line front end and the sweep tests:
// deterministic number formatting (12 significant digits, '.' decimal
// separator), RFC-4180-style field quoting, and small loaders for instance
// files with '#' comment lines.

namespace mismatch {

inline std::string csv_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

// Quotes only when the field needs it, doubling embedded quotes.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    return out;
}

inline double parse_number(const std::string& tok) {
    std::size_t b = tok.find_first_not_of(" \t");
    std::size_t e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) throw Error("empty numeric field");
    double v = 0.0;
    auto res = std::from_chars(tok.data() + b, tok.data() + e + 1, v);
    if (res.ec != std::errc() || res.ptr != tok.data() + e + 1)
        throw Error("malformed number: '" + tok + "'");
    return v;
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// Rows of numbers, one per line; '#' starts a comment, blank lines skipped.
inline std::vector<Vec> load_rows_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<Vec> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Vec row;
        for (const std::string& tok : detail::split_fields(line)) row.push_back(parse_number(tok));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix load_matrix_csv(const std::string& path) {
    return Matrix::from_rows(load_rows_csv(path));
}

// Accepts a single row or a single column.
inline Vec load_vector_csv(const std::string& path) {
    std::vector<Vec> rows = load_rows_csv(path);
    if (rows.empty()) throw Error("no data in '" + path + "'");
    if (rows.size() == 1) return rows[0];
    Vec out;
    for (const Vec& r : rows) {
        if (r.size() != 1) throw Error("'" + path + "' is neither a row nor a column");
        out.push_back(r[0]);
    }
    return out;
}

}  // namespace mismatch
