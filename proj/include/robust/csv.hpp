#pragma once

// Delimited-text ingestion: comma or tab (autodetected), optional header
// (autodetected), numeric columns with row/column diagnostics.

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "robust/error.hpp"
#include "robust/linalg.hpp"

namespace robust::csv {

struct Table {
  char delimiter = ',';
  bool header = false;
  std::vector<std::string> names;               // one per column ("V1".. without header)
  std::vector<std::vector<std::string>> cells;  // data rows
  std::vector<std::size_t> line_of;             // 1-based file line of each data row
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == delim && !quoted) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

/// `header` forces the header verdict; by default the first line is a
/// header when any of its fields is not a number.
inline Table parse(std::istream& in, const std::string& source = "input",
                   std::optional<bool> header = std::nullopt) {
  Table t;
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    lines.emplace_back(lineno, line);
  }
  if (lines.empty()) throw InputError(source + ": no data");
  const std::string& first = lines.front().second;
  t.delimiter = first.find('\t') != std::string::npos ? '\t' : ',';

  const auto head = split(first, t.delimiter);
  t.header = header ? *header : std::any_of(head.begin(), head.end(), [](const std::string& s) {
    return !parse_number(s);
  });
  if (t.header) {
    t.names = head;
  } else {
    for (std::size_t j = 0; j < head.size(); ++j) t.names.push_back("V" + std::to_string(j + 1));
  }
  for (std::size_t r = t.header ? 1 : 0; r < lines.size(); ++r) {
    auto row = split(lines[r].second, t.delimiter);
    if (row.size() != t.names.size()) {
      std::ostringstream os;
      os << source << ": line " << lines[r].first << " has " << row.size() << " fields, expected "
         << t.names.size();
      throw InputError(os.str());
    }
    t.cells.push_back(std::move(row));
    t.line_of.push_back(lines[r].first);
  }
  if (t.cells.empty()) throw InputError(source + ": header but no data rows");
  return t;
}

inline Table read_file(const std::string& path, std::optional<bool> header = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return parse(in, path, header);
}

/// Column index from a name or a 1-based position.
inline std::size_t resolve_column(const Table& t, const std::string& key) {
  for (std::size_t j = 0; j < t.names.size(); ++j)
    if (t.names[j] == key) return j;
  if (auto v = parse_number(key); v && *v >= 1 && *v <= static_cast<double>(t.names.size()) &&
                                  *v == std::floor(*v))
    return static_cast<std::size_t>(*v) - 1;
  throw InputError("unknown column '" + key + "'");
}

/// Numeric matrix of the given columns; a malformed cell raises an error
/// naming its data row, file line, column and token.
inline MatrixXd numeric(const Table& t, const std::vector<std::size_t>& cols) {
  if (cols.empty()) throw InputError("empty column selection");
  MatrixXd X(static_cast<Index>(t.cells.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < t.cells.size(); ++i)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string& tok = t.cells[i][cols[c]];
      const auto v = parse_number(tok);
      if (!v) {
        std::ostringstream os;
        os << "row " << i + 1 << " (line " << t.line_of[i] << "), column " << cols[c] + 1 << " ("
           << t.names[cols[c]] << "): cannot parse '" << tok << "' as a number";
        throw InputError(os.str());
      }
      X(static_cast<Index>(i), static_cast<Index>(c)) = *v;
    }
  return X;
}

}  // namespace robust::csv
