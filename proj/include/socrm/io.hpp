#pragma once

#include <string>
#include <vector>

namespace socrm {

/// Whole-file helpers; both throw IoError on failure.
std::string read_file(const std::string &path);
void write_file(const std::string &path, const std::string &contents);

/// Comma-separated rows without quoting. Blank lines are skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws IoError when missing.
    int column(const std::string &name) const;
};

CsvTable parse_csv(const std::string &text);
std::vector<std::string> split_csv_line(const std::string &line);

/// Strict numeric parsing; throws IoError naming the offending field.
double parse_double(const std::string &field, const std::string &what);
long long parse_int(const std::string &field, const std::string &what);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace socrm
