#include "san/io/csv.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "san/error.hpp"

namespace san::io {

std::vector<CsvRow> read_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  bool after_quote = false;
  int line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
    after_quote = false;
  };
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      end_field();
      rows.push_back(std::move(row));
    }
    row.clear();
  };
  char ch;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || after_quote)
          throw Error(ErrorCode::Io, "malformed CSV: stray quote on line " + std::to_string(line));
        quoted = true;
        field_started = true;
        break;
      case ',':
        field_started = true;
        end_field();
        field_started = true;  // the next field exists, even if empty
        break;
      case '\r':
        if (in.peek() != '\n')
          throw Error(ErrorCode::Io, "malformed CSV: bare carriage return on line " + std::to_string(line));
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        if (after_quote)
          throw Error(ErrorCode::Io, "malformed CSV: text after closing quote on line " + std::to_string(line));
        field += ch;
        field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::Io, "malformed CSV: unterminated quoted field");
  end_row();
  return rows;
}

std::vector<CsvRow> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'", path);
  return read_csv(in);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& out, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_field(row[i]);
  }
  out << "\r\n";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace san::io
