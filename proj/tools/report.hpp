#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace repeaterlab::cli {

using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

struct Field {
  std::string name;
  Value value;
};

/// One output row; field order is column order.
using Record = std::vector<Field>;

enum class Format { table, csv, jsonl };

/// Parses "table", "csv" or "jsonl"; throws std::invalid_argument otherwise.
Format parse_format(std::string_view text);

/// Shortest-safe decimal with `digits` significant digits, '.' separator.
std::string format_number(double x, int digits = 17);

/// Writes all records at once. CSV and table share one header built from
/// the union of field names in first-seen order.
void emit(std::ostream& out, const std::vector<Record>& records, Format format);

}  // namespace repeaterlab::cli
