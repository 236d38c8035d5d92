#pragma once

// Small CSV table with shortest round-trip number formatting.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace zoibmed {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

class Table {
 public:
  using Cell = std::variant<std::string, double, long long>;

  Table() = default;
  explicit Table(std::vector<std::string> header);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return cells_.size(); }
  std::size_t cols() const noexcept { return header_.size(); }

  void add_row(const std::vector<Cell>& row);
  const std::string& at(std::size_t r, std::size_t c) const { return cells_.at(r).at(c); }
  const std::string& at(std::size_t r, const std::string& column) const;
  double number(std::size_t r, const std::string& column) const;
  std::size_t column(const std::string& name) const;  // throws if missing
  bool has_column(const std::string& name) const noexcept;

  /// RFC 4180 style: fields containing ',', '"' or newlines are quoted.
  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
  static Table read_csv(std::istream& is);
  static Table parse_csv(const std::string& text);

  /// Array of objects; cells that parse fully as numbers become numbers.
  std::string to_json(int indent = 2) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

}  // namespace zoibmed
