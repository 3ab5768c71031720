#include "rka/csv.hpp"
#include "rka/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rka::csv {

namespace {

struct Line {
    std::size_t number;
    std::string_view text;
};

std::vector<Line> split_lines(std::string_view text)
{
    std::vector<Line> lines;
    std::size_t number = 1;
    while (!text.empty()) {
        const auto end = text.find('\n');
        auto line = text.substr(0, end);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back({number++, line});
        if (end == std::string_view::npos) {
            break;
        }
        text.remove_prefix(end + 1);
    }
    return lines;
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& msg)
{
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg);
}

std::vector<double> parse_row(const Line& line)
{
    std::vector<double> values;
    std::size_t pos = 0;
    const auto text = line.text;
    while (true) {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) {
            ++pos;
        }
        const std::size_t start = pos;
        // from_chars rejects a leading '+'; accept it for hand-written files.
        if (pos < text.size() && text[pos] == '+') {
            ++pos;
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
        if (ec != std::errc() || ptr == text.data() + pos) {
            parse_fail(line.number, start + 1, "expected a number");
        }
        pos = static_cast<std::size_t>(ptr - text.data());
        values.push_back(value);
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) {
            ++pos;
        }
        if (pos == text.size()) {
            break;
        }
        if (text[pos] != ',') {
            parse_fail(line.number, pos + 1, std::string("unexpected character '") + text[pos] + "'");
        }
        ++pos;
    }
    return values;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) {
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
}

} // namespace

Matrix parse_matrix(std::string_view text)
{
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::vector<double> entries;
    for (const auto& line : split_lines(text)) {
        if (is_blank(line.text)) {
            continue;
        }
        auto values = parse_row(line);
        if (rows == 0) {
            cols = values.size();
        } else if (values.size() != cols) {
            parse_fail(line.number, 1,
                       "row has " + std::to_string(values.size()) + " fields, expected " + std::to_string(cols));
        }
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (!std::isfinite(values[j])) {
                parse_fail(line.number, 1, "field " + std::to_string(j + 1) + " is not finite");
            }
        }
        entries.insert(entries.end(), values.begin(), values.end());
        ++rows;
    }
    if (rows == 0) {
        throw Error(ErrorCode::ParseError, "no data rows");
    }
    return Matrix(rows, cols, std::move(entries));
}

Matrix read_matrix(const std::filesystem::path& path)
{
    try {
        return parse_matrix(read_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) {
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
        }
        throw;
    }
}

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

void write_matrix(std::ostream& out, const Matrix& m)
{
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) {
                out << ',';
            }
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix(const std::filesystem::path& path, const Matrix& m)
{
    auto out = open_out(path);
    write_matrix(out, m);
    finish(out, path);
}

Vector read_vector(const std::filesystem::path& path)
{
    const Matrix m = read_matrix(path);
    if (m.cols() != 1 && m.rows() != 1) {
        throw Error(ErrorCode::ShapeMismatch, path.string() + ": expected a single row or column, got " +
                                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    return Vector(m.data().begin(), m.data().end());
}

void write_vector(const std::filesystem::path& path, std::span<const double> v)
{
    write_matrix(path, Matrix(v.size(), 1, Vector(v.begin(), v.end())));
}

Table parse_table(std::string_view text)
{
    Table t;
    bool have_header = false;
    for (const auto& line : split_lines(text)) {
        if (!have_header && !line.text.empty() && line.text.front() == '#') {
            t.comments.emplace_back(line.text.substr(1));
            continue;
        }
        if (is_blank(line.text)) {
            continue;
        }
        if (!have_header) {
            std::string_view rest = line.text;
            while (true) {
                const auto comma = rest.find(',');
                t.columns.emplace_back(rest.substr(0, comma));
                if (comma == std::string_view::npos) {
                    break;
                }
                rest.remove_prefix(comma + 1);
            }
            have_header = true;
            continue;
        }
        auto values = parse_row(line);
        if (values.size() != t.columns.size()) {
            parse_fail(line.number, 1,
                       "row has " + std::to_string(values.size()) + " fields, header has " +
                           std::to_string(t.columns.size()));
        }
        t.rows.push_back(std::move(values));
    }
    if (!have_header) {
        throw Error(ErrorCode::ParseError, "table has no header line");
    }
    return t;
}

Table read_table(const std::filesystem::path& path) { return parse_table(read_file(path)); }

void write_table(std::ostream& out, const Table& t)
{
    for (const auto& c : t.comments) {
        out << '#' << c << '\n';
    }
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
        out << (j ? "," : "") << t.columns[j];
    }
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            out << (j ? "," : "") << format_double(row[j]);
        }
        out << '\n';
    }
}

void write_table(const std::filesystem::path& path, const Table& t)
{
    auto out = open_out(path);
    write_table(out, t);
    finish(out, path);
}

} // namespace rka::csv
