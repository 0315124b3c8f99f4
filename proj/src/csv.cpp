#include "waitgame/csv.hpp"

#include <charconv>
#include <cstdlib>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace waitgame::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << escape(fields[i]);
  }
  out_ << '\n';
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

Table Table::read(std::istream& in) {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      t.header_ = std::move(fields);
      for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_.emplace(t.header_[i], i);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header_.size()) {
      throw ParseError(fmt::format("line {}: expected {} fields, got {}", line_no,
                                   t.header_.size(), fields.size()));
    }
    t.rows_.push_back(std::move(fields));
  }
  return t;
}

void Table::require(const std::vector<std::string>& required) const {
  std::vector<std::string> missing;
  for (const auto& name : required) {
    if (!has(name)) missing.push_back(name);
  }
  if (missing.empty()) return;
  std::string what = "missing column(s):";
  for (const auto& m : missing) what += " " + m;
  throw SchemaError(what, missing);
}

bool Table::has(std::string_view column) const {
  return index_.find(std::string(column)) != index_.end();
}

const std::string& Table::at(std::size_t row, std::string_view column) const {
  auto it = index_.find(std::string(column));
  if (it == index_.end()) {
    throw SchemaError("missing column(s): " + std::string(column), {std::string(column)});
  }
  return rows_.at(row)[it->second];
}

namespace {
template <typename T>
T parse_integral(std::string_view text, std::string_view column) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(fmt::format("column {}: not an integer: '{}'", column, text));
  }
  return value;
}
}  // namespace

std::int64_t to_int64(std::string_view text, std::string_view column) {
  return parse_integral<std::int64_t>(text, column);
}

std::uint64_t to_uint64(std::string_view text, std::string_view column) {
  return parse_integral<std::uint64_t>(text, column);
}

double to_double(std::string_view text, std::string_view column) {
  // from_chars for double is not available in libstdc++ 11 for all targets.
  std::string owned(text);
  char* end = nullptr;
  const double v = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size()) {
    throw ParseError(fmt::format("column {}: not a number: '{}'", column, text));
  }
  return v;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  return fmt::format("{}", value);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

}  // namespace waitgame::csv
