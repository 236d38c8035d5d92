#include "zoibmed/table.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include "json.hpp"
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "zoibmed/error.hpp"

namespace zoibmed {

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "NaN" || s == "nan" || s == "NA") return std::nan("");
  if (s == "Inf" || s == "inf") return INFINITY;
  if (s == "-Inf" || s == "-inf") return -INFINITY;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || first == last)
    throw DataError("not a number: '" + s + "'");
  return v;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::add_row(const std::vector<Cell>& row) {
  if (row.size() != header_.size())
    throw DomainError("table row has " + std::to_string(row.size()) +
                      " cells, header has " + std::to_string(header_.size()));
  std::vector<std::string> out;
  out.reserve(row.size());
  for (const auto& c : row) {
    if (const auto* s = std::get_if<std::string>(&c))
      out.push_back(*s);
    else if (const auto* d = std::get_if<double>(&c))
      out.push_back(format_double(*d));
    else
      out.push_back(std::to_string(std::get<long long>(c)));
  }
  cells_.push_back(std::move(out));
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t c = 0; c < header_.size(); ++c)
    if (header_[c] == name) return c;
  throw DataError("missing column '" + name + "'");
}

bool Table::has_column(const std::string& name) const noexcept {
  for (const auto& h : header_)
    if (h == name) return true;
  return false;
}

const std::string& Table::at(std::size_t r, const std::string& name) const {
  return at(r, column(name));
}

double Table::number(std::size_t r, const std::string& name) const {
  return parse_double(at(r, name));
}

namespace {

void write_field(std::ostream& os, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    os << f;
    return;
  }
  os << '"';
  for (char ch : f) {
    if (ch == '"') os << '"';
    os << ch;
  }
  os << '"';
}

}  // namespace

void Table::write_csv(std::ostream& os) const {
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << ',';
      write_field(os, row[c]);
    }
    os << '\n';
  };
  line(header_);
  for (const auto& r : cells_) line(r);
}

std::string Table::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

Table Table::parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\r') {
      continue;
    } else if (ch == '\n') {
      end_record();
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw DataError("CSV: unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  if (records.empty()) throw DataError("CSV: no header row");

  Table t(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header_.size())
      throw DataError("CSV: row " + std::to_string(r) + " has " +
                          std::to_string(records[r].size()) + " fields, expected " +
                          std::to_string(t.header_.size()),
                      r - 1);
    t.cells_.push_back(std::move(records[r]));
  }
  return t;
}

Table Table::read_csv(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_csv(ss.str());
}

std::string Table::to_json(int indent) const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : cells_) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < header_.size(); ++c) {
      const std::string& v = row[c];
      double d = 0.0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
      if (!v.empty() && res.ec == std::errc() && res.ptr == v.data() + v.size() &&
          std::isfinite(d))
        obj[header_[c]] = d;
      else
        obj[header_[c]] = v;
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(indent) + "\n";
}

}  // namespace zoibmed
