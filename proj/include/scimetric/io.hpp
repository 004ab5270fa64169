#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scimetric/errors.hpp"
#include "scimetric/indicators.hpp"
#include "scimetric/stats.hpp"

namespace scimetric::io {

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!content.empty() && content.back() != '\n') out << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline std::vector<std::string> split_tsv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == '\t') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

/// Indicator matrix as TSV: researcher_id, academic_age, then the canonical
/// indicator columns (or a selected subset).
inline std::string matrix_to_tsv(const std::vector<IndicatorVector>& rows,
                                 const std::vector<Ind>& columns) {
  std::ostringstream out;
  out << "researcher_id\tacademic_age";
  for (Ind c : columns) out << '\t' << indicator_name(c);
  out << '\n';
  for (const auto& r : rows) {
    out << r.researcher_id << '\t' << r.academic_age;
    for (Ind c : columns) out << '\t' << stats::format_number(r[c]);
    out << '\n';
  }
  return out.str();
}

inline std::vector<Ind> all_indicator_columns() {
  std::vector<Ind> cols;
  cols.reserve(kIndicatorCount);
  for (int i = 0; i < kIndicatorCount; ++i) cols.push_back(static_cast<Ind>(i));
  return cols;
}

/// Reads back a full matrix TSV produced by matrix_to_tsv (all 44 columns).
inline std::vector<IndicatorVector> load_matrix_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_tsv_row(line);
  if (header.size() < 2 || header[0] != "researcher_id" || header[1] != "academic_age")
    throw ParseError(path + ": expected header starting researcher_id<TAB>academic_age");
  std::vector<Ind> columns;
  for (std::size_t i = 2; i < header.size(); ++i) columns.push_back(indicator_from_name(header[i]));
  if (static_cast<int>(columns.size()) != kIndicatorCount)
    throw ParseError(path + ": expected all " + std::to_string(kIndicatorCount) +
                     " indicator columns, got " + std::to_string(columns.size()));

  std::vector<IndicatorVector> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_tsv_row(line);
    if (fields.size() != header.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": wrong field count");
    IndicatorVector v;
    v.researcher_id = fields[0];
    try {
      v.academic_age = std::stoi(fields[1]);
      for (std::size_t i = 0; i < columns.size(); ++i) v[columns[i]] = std::stod(fields[i + 2]);
    } catch (...) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

inline std::string assignments_to_tsv(const std::map<std::string, int>& assignments) {
  std::ostringstream out;
  out << "researcher_id\tcluster\n";
  for (const auto& [id, cl] : assignments) out << id << '\t' << cl << '\n';
  return out.str();
}

inline std::map<std::string, int> load_assignments_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_tsv_row(line);
  if (header.size() != 2 || header[0] != "researcher_id" || header[1] != "cluster")
    throw ParseError(path + ": expected header researcher_id<TAB>cluster");
  std::map<std::string, int> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_tsv_row(line);
    if (fields.size() != 2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": wrong field count");
    try {
      out[fields[0]] = std::stoi(fields[1]);
    } catch (...) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed cluster index");
    }
  }
  return out;
}

}  // namespace scimetric::io
