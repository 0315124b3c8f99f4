#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace waitgame::csv {

/// Raised when an input CSV lacks columns the reader needs. The message
/// names every missing column.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string what, std::vector<std::string> missing)
      : std::runtime_error(std::move(what)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string escape(std::string_view field);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

/// Header-indexed table read fully into memory.
class Table {
 public:
  static Table read(std::istream& in);

  /// Throws SchemaError listing every name in `required` not in the header.
  void require(const std::vector<std::string>& required) const;

  bool has(std::string_view column) const;
  std::size_t rows() const noexcept { return rows_.size(); }
  const std::string& at(std::size_t row, std::string_view column) const;
  const std::vector<std::string>& header() const noexcept { return header_; }

 private:
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> split_line(std::string_view line);

std::int64_t to_int64(std::string_view text, std::string_view column);
std::uint64_t to_uint64(std::string_view text, std::string_view column);
double to_double(std::string_view text, std::string_view column);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

}  // namespace waitgame::csv
