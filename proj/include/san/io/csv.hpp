#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace san::io {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks; CRLF and LF line ends are both accepted. Blank lines are skipped.
std::vector<CsvRow> read_csv(std::istream& in);
std::vector<CsvRow> read_csv_file(const std::string& path);

/// Quotes a field when it holds a comma, quote or line break.
std::string csv_field(const std::string& s);
void write_csv_row(std::ostream& out, const CsvRow& row);

/// 17 significant digits: parses back to the same double.
std::string format_double(double v);

}  // namespace san::io
