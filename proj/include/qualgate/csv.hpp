#ifndef QUALGATE_CSV_HPP_
#define QUALGATE_CSV_HPP_

// Minimal RFC 4180 CSV: quoted fields, doubled quotes, embedded newlines.

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qualgate/errors.hpp"

namespace qualgate::csv {

using Row = std::vector<std::string>;

/// Reads one record. Returns false at end of input. `line` is advanced by the
/// number of physical lines consumed.
inline bool read_row(std::istream& in, Row& row, std::size_t& line) {
  row.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;

  std::string field;
  bool quoted = false;
  bool any = false;
  const std::size_t start_line = line + 1;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      row.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quoted field", start_line);
  if (any) {
    ++line;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    row.push_back(std::move(field));
  }
  return any;
}

inline std::string escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << escape(row[i]);
  }
  out << '\n';
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::optional<double> parse_optional_double(std::string_view s,
                                                   std::size_t line,
                                                   std::string_view column) {
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size())
    throw DataError("column '" + std::string(column) + "': not a number: '" +
                        tmp + "'",
                    line);
  return v;
}

}  // namespace qualgate::csv

#endif  // QUALGATE_CSV_HPP_
