#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace repeaterlab::cli {
namespace {

std::vector<std::string> columns(const std::vector<Record>& records) {
  std::vector<std::string> names;
  for (const Record& r : records) {
    for (const Field& f : r) {
      if (std::find(names.begin(), names.end(), f.name) == names.end()) {
        names.push_back(f.name);
      }
    }
  }
  return names;
}

const Value* lookup(const Record& r, const std::string& name) {
  for (const Field& f : r) {
    if (f.name == name) return &f.value;
  }
  return nullptr;
}

std::string render(const Value& v, int digits) {
  struct Visitor {
    int digits;
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_number(d, digits); }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{digits}, v);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

void emit_csv(std::ostream& out, const std::vector<Record>& records) {
  const auto names = columns(records);
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << (i ? "," : "") << csv_escape(names[i]);
  }
  out << '\n';
  for (const Record& r : records) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const Value* v = lookup(r, names[i]);
      out << (i ? "," : "") << (v ? csv_escape(render(*v, 17)) : "");
    }
    out << '\n';
  }
}

void emit_jsonl(std::ostream& out, const std::vector<Record>& records) {
  for (const Record& r : records) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (const Field& f : r) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              row[f.name] = nullptr;
            } else {
              row[f.name] = x;
            }
          },
          f.value);
    }
    out << row.dump() << '\n';
  }
}

void emit_table(std::ostream& out, const std::vector<Record>& records) {
  const auto names = columns(records);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) width[i] = names[i].size();
  for (const Record& r : records) {
    std::vector<std::string> row;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const Value* v = lookup(r, names[i]);
      row.push_back(v ? render(*v, 6) : "-");
      width[i] = std::max(width[i], row.back().size());
    }
    cells.push_back(std::move(row));
  }
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      out << row[i];
      if (i + 1 < row.size()) out << std::string(width[i] - row[i].size(), ' ');
    }
    out << '\n';
  };
  line(names);
  for (const auto& row : cells) line(row);
}

}  // namespace

Format parse_format(std::string_view text) {
  if (text == "table") return Format::table;
  if (text == "csv") return Format::csv;
  if (text == "jsonl") return Format::jsonl;
  throw std::invalid_argument("unknown format: " + std::string(text));
}

std::string format_number(double x, int digits) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

void emit(std::ostream& out, const std::vector<Record>& records, Format format) {
  switch (format) {
    case Format::table:
      emit_table(out, records);
      break;
    case Format::csv:
      emit_csv(out, records);
      break;
    case Format::jsonl:
      emit_jsonl(out, records);
      break;
  }
}

}  // namespace repeaterlab::cli
