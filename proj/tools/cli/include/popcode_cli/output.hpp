#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace popcode::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  /// Columns holding information in nats; rescaled by 1/ln 2 under --bits.
  std::vector<bool> information;
  std::vector<std::vector<Cell>> rows;

  void add_column(std::string name, bool is_information = false);
};

/// Shortest representation that round-trips (%.17g), "inf"/"-inf"/"nan" otherwise.
std::string format_cell(const Cell& cell, bool to_bits, bool is_information);

/// Writes the table with trailing config_hash and seed columns on every row.
std::string render_csv(const Table& table, const std::string& config_hash, std::uint64_t seed, bool bits);
void write_text(const std::string& path, const std::string& text);

}  // namespace popcode::cli
