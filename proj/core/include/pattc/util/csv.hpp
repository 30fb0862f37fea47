#pragma once

#include <string>
#include <vector>

namespace pattc::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

// Reads a delimited text file with a mandatory header row.  Fields are not
// quoted in any of the formats we produce or consume.
Table read_file(const std::string& path, char delim = ',');

void write_file(const std::string& path, const Table& table, char delim = ',');

// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

}  // namespace pattc::csv
