#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/grid.hpp"

namespace mfg::io {

/// 17 significant digits, which parse back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (res.ec != std::errc{}) throw FormatError("cannot format number");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

/// Long format, one row per (level, node): t,x1[,x2],value. Nodes run with x1 fastest.
inline void write_field_csv(std::ostream& os, const Grid& grid, const LevelField& field) {
    if (field.levels() != grid.num_levels() || field.nodes() != grid.num_nodes()) {
        throw InvalidArgument("write_field_csv: field does not match the grid");
    }
    os << (grid.dim() == 1 ? "t,x1,value\n" : "t,x1,x2,value\n");
    std::string row;
    for (std::size_t k = 0; k < field.levels(); ++k) {
        const std::string t = format_double(grid.time(k));
        for (std::size_t n = 0; n < field.nodes(); ++n) {
            row = t;
            for (std::size_t d = 0; d < grid.dim(); ++d) {
                row += ',';
                row += format_double(grid.coordinate(n, d));
            }
            row += ',';
            row += format_double(field.at(k, n));
            row += '\n';
            os << row;
        }
    }
}

inline void write_field_csv(const std::string& path, const Grid& grid, const LevelField& field) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    write_field_csv(os, grid, field);
    if (!os) throw Error("write to '" + path + "' failed");
}

/// Reads a field written by write_field_csv back onto `grid`. Rows must be complete and
/// in the written order; coordinates are checked against the grid to 1e-9.
inline LevelField read_field_csv(std::istream& is, const Grid& grid) {
    const std::size_t cols = grid.dim() + 2;
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty CSV");
    if (split_commas(line).size() != cols) throw FormatError("CSV header does not match the grid dimension");
    LevelField field(grid.num_levels(), grid.num_nodes());
    const std::size_t total = grid.num_levels() * grid.num_nodes();
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        if (row >= total) throw FormatError("CSV has more rows than the grid");
        const auto parts = split_commas(line);
        if (parts.size() != cols) throw FormatError("CSV row " + std::to_string(row + 2) + " has the wrong column count");
        const std::size_t k = row / grid.num_nodes();
        const std::size_t n = row % grid.num_nodes();
        auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)); };
        bool ok = near(parse_double(parts[0]), grid.time(k));
        for (std::size_t d = 0; d < grid.dim(); ++d) ok = ok && near(parse_double(parts[d + 1]), grid.coordinate(n, d));
        if (!ok) throw FormatError("CSV row " + std::to_string(row + 2) + " is off the grid");
        field.at(k, n) = parse_double(parts[cols - 1]);
        ++row;
    }
    if (row != total) throw FormatError("CSV has " + std::to_string(row) + " rows, grid needs " + std::to_string(total));
    return field;
}

inline LevelField read_field_csv(const std::string& path, const Grid& grid) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open '" + path + "'");
    return read_field_csv(is, grid);
}

/// iteration,rho with iterations counted from 1.
inline void write_residuals_csv(std::ostream& os, std::span<const double> history) {
    os << "iteration,rho\n";
    for (std::size_t i = 0; i < history.size(); ++i) os << (i + 1) << ',' << format_double(history[i]) << '\n';
}

inline void write_residuals_csv(const std::string& path, std::span<const double> history) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    write_residuals_csv(os, history);
}

}  // namespace mfg::io
