#pragma once

#include "rka/linalg.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rka::csv {

/// Parses a matrix: one row per line, comma-separated decimal literals, no
/// header. Blank lines are ignored. Errors name the offending line and column.
Matrix parse_matrix(std::string_view text);
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Reads a vector stored either as a single column or a single row.
Vector read_vector(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, std::span<const double> v);

/// Shortest text for `v` carrying 17 significant digits.
std::string format_double(double v);

/// A headed numeric table as written by the experiment harness: optional
/// leading `#` comment lines, one header line, then numeric rows.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    friend bool operator==(const Table&, const Table&) = default;
};

Table parse_table(std::string_view text);
Table read_table(const std::filesystem::path& path);
void write_table(std::ostream& out, const Table& t);
void write_table(const std::filesystem::path& path, const Table& t);

} // namespace rka::csv
