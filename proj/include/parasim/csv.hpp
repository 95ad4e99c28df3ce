#pragma once

// Minimal RFC-4180 CSV writer and reader.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace parasim {

/// Shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Parses a field written by format_double.
inline double parse_double(std::string_view s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  return std::stod(std::string(s));
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((write_field(fields, first)), ...);
    out_ << "\r\n";
  }

  void row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) write_field(f, first);
    out_ << "\r\n";
  }

 private:
  template <class T>
  void write_field(const T& value, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_same_v<T, bool>) {
      out_ << (value ? 1 : 0);
    } else if constexpr (std::is_floating_point_v<T>) {
      out_ << format_double(static_cast<double>(value));
    } else if constexpr (std::is_integral_v<T>) {
      out_ << value;
    } else {
      write_text(std::string_view(value));
    }
  }

  void write_text(std::string_view text) {
    if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
      out_ << text;
      return;
    }
    out_ << '"';
    for (char c : text) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }

  std::ostream& out_;
};

/// Reads all records; handles quoted fields and CRLF or LF line ends.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // swallowed; the following '\n' ends the record
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace parasim
