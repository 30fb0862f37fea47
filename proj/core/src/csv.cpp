#include "pattc/util/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pattc/util/error.hpp"

namespace pattc::csv {

int Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  return -1;
}

static std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

Table read_file(const std::string& path, char delim) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file: " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line, delim);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    t.rows.push_back(split_line(line, delim));
  }
  return t;
}

void write_file(const std::string& path, const Table& table, char delim) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open file for writing: " + path);
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << delim;
    out << table.header[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << delim;
      out << row[j];
    }
    out << '\n';
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace pattc::csv
