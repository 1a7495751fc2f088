#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace mlocrisk {

/// Shortest decimal that parses back to the same double; "inf"/"-inf"/"nan" otherwise.
std::string format_double(double value);

using CsvCell = std::variant<double, long long, std::string>;

/// Header plus rows; written comma-separated with '.' decimals.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<CsvCell>> rows;

  void add_row(std::vector<CsvCell> row);
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace mlocrisk
