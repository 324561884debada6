#include "socrm/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "socrm/error.hpp"

namespace socrm {

std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path + " for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, const std::string &contents)
{
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) {
        std::filesystem::create_directories(parent, ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out << contents;
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

int CsvTable::column(const std::string &name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return static_cast<int>(i);
        }
    }
    throw IoError("csv: missing column '" + name + "'");
}

std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        }
        else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

CsvTable parse_csv(const std::string &text)
{
    CsvTable table;
    std::istringstream is(text);
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto fields = split_csv_line(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw IoError("csv: row has " + std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) {
        throw IoError("csv: empty input");
    }
    return table;
}

double parse_double(const std::string &field, const std::string &what)
{
    double value = 0.0;
    const char *begin = field.data();
    const char *end = begin + field.size();
    while (begin < end && *begin == ' ') {
        ++begin;
    }
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw IoError("cannot parse " + what + " from '" + field + "'");
    }
    return value;
}

long long parse_int(const std::string &field, const std::string &what)
{
    long long value = 0;
    const char *begin = field.data();
    const char *end = begin + field.size();
    while (begin < end && *begin == ' ') {
        ++begin;
    }
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw IoError("cannot parse " + what + " from '" + field + "'");
    }
    return value;
}

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace socrm
