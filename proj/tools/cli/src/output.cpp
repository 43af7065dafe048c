#include "popcode_cli/output.hpp"

#include "popcode/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace popcode::cli {

void Table::add_column(std::string name, bool is_information) {
  columns.push_back(std::move(name));
  information.push_back(is_information);
}

std::string format_cell(const Cell& cell, bool to_bits, bool is_information) {
  if (const auto* s = std::get_if<std::string>(&cell)) {
    return *s;
  }
  if (const auto* i = std::get_if<std::int64_t>(&cell)) {
    return std::to_string(*i);
  }
  double v = std::get<double>(cell);
  if (to_bits && is_information) {
    v /= std::numbers::ln2;
  }
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string render_csv(const Table& table, const std::string& config_hash, std::uint64_t seed, bool bits) {
  std::string out;
  for (const auto& c : table.columns) {
    out += c;
    out += ',';
  }
  out += "config_hash,seed\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += format_cell(row[i], bits, table.information[i]);
      out += ',';
    }
    out += config_hash;
    out += ',';
    out += std::to_string(seed);
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw Error(Errc::io_error, "cannot write '" + path + "'");
  }
  f << text;
  if (!f) {
    throw Error(Errc::io_error, "write to '" + path + "' failed");
  }
}

}  // namespace popcode::cli
