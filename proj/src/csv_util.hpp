// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "dds/error.hpp"

namespace dds::csv {

struct Row {
  std::size_t line = 0;  // 1-based physical line number
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Reads a whole CSV file; the first non-comment line is the header.
// Lines starting with '#' and blank lines are skipped.
inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  Table table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (!have_header) {
      table.header = split_line(line);
      for (std::string& h : table.header) h = trim(h);
      have_header = true;
    } else {
      Row row;
      row.line = lineno;
      row.fields = split_line(line);
      for (std::string& f : row.fields) f = trim(f);
      table.rows.push_back(std::move(row));
    }
  }
  if (!have_header)
    throw Error(ErrorCode::MissingColumn, "no header in " + path);
  return table;
}

inline double parse_double(const std::string& text, std::size_t line) {
  if (text.empty())
    throw Error(ErrorCode::MissingValue, "empty numeric field", line);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "bad number '" + text + "'", line);
  }
  if (used != text.size())
    throw Error(ErrorCode::ParseError, "bad number '" + text + "'", line);
  return value;
}

}  // namespace dds::csv
