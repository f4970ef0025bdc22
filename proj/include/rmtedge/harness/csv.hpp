#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace rmtedge::harness {

/// Column-ordered numeric table. Integers and flags are stored as doubles
/// and come out without a fractional part; everything is written with 17
/// significant digits, which round-trips every double exactly.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw std::out_of_range("csv: no column named " + name);
  }
};

namespace schema {
inline const std::vector<std::string> edge{"trial", "N", "lambda_max", "rescaled", "seed_lo", "seed_hi"};
inline const std::vector<std::string> necessity{"trial", "N", "lambda_max", "exceeds3", "witness_found"};
inline const std::vector<std::string> rigidity{"trial", "N", "rig_max", "count_sup"};
inline const std::vector<std::string> delocalization{"trial", "N", "deloc", "norm"};
inline const std::vector<std::string> tracking{"trial", "N", "gap", "gap_ok", "rank_E"};
inline const std::vector<std::string> tw_table{"s", "F1", "F2"};
}  // namespace schema

inline std::string format_field(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  std::string line;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) line += ',';
    line += table.columns[i];
  }
  out << line << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::invalid_argument("csv: row width differs from header in " + path);
    line.clear();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += format_field(row[i]);
    }
    out << line << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' has no header");
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) table.columns.push_back(name);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.columns.size());
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto res = std::from_chars(p, comma, v);
      if (res.ec != std::errc() || res.ptr != comma) {
        throw std::runtime_error("'" + path + "' line " + std::to_string(lineno) + ": bad number");
      }
      row.push_back(v);
      p = comma + 1;
    }
    if (row.size() != table.columns.size()) {
      throw std::runtime_error("'" + path + "' line " + std::to_string(lineno) + ": wrong field count");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rmtedge::harness
