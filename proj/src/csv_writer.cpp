#include "mlocrisk/csv_writer.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "mlocrisk/errors.hpp"

namespace mlocrisk {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error("format_double: buffer too small");
  return std::string(buf.data(), ptr);
}

void CsvTable::add_row(std::vector<CsvCell> row) {
  if (row.size() != columns.size()) {
    throw Error("CsvTable: row has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

namespace {

void write_cell(std::ostream& out, const CsvCell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    out << format_double(*d);
  } else if (const auto* i = std::get_if<long long>(&cell)) {
    out << *i;
  } else {
    out << std::get<std::string>(cell);
  }
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out << ',';
    out << table.columns[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      write_cell(out, row[j]);
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(out, table);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace mlocrisk
