#pragma once

// CSV tables: comma separated, header row, LF line endings, 17 significant
// digits.

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kbe/error.hpp"

namespace kbe::io {

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd data;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "no column named '" + name + "'");
  }
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const Table& t) {
  if (!t.header.empty() && static_cast<Eigen::Index>(t.header.size()) != t.data.cols())
    throw Error(ErrorCode::DimensionMismatch, "header and data widths differ");
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (Eigen::Index r = 0; r < t.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.data.cols(); ++c) os << (c ? "," : "") << format_double(t.data(r, c));
    os << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const Table& t) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  write_csv(os, t);
  if (!os) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw Error(ErrorCode::InvalidArgument, "cannot parse number '" + t + "' in " + where);
  return v;
}

inline Table read_csv(std::istream& is, const std::string& name = "csv") {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Io, "empty file " + name);
  for (auto& h : split(line)) t.header.push_back(trim(h));
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::InvalidArgument, name + " line " + std::to_string(lineno) + ": expected " +
                                                  std::to_string(t.header.size()) + " fields");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, name + " line " + std::to_string(lineno)));
    rows.push_back(std::move(row));
  }
  t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      t.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return t;
}

inline Table read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return read_csv(is, path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

}  // namespace kbe::io
