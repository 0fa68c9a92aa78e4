#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace ptlab {

// ============================================================================
// Deterministic tabular output: CSV with '#' metadata comments, or JSON with
// the same metadata and rows as an array of records. Doubles are printed with
// 17 significant digits ('%.17g', '.' separator, no locale), so identical
// configurations produce byte-identical files.
// ============================================================================

// A cell is empty (monostate), a double, an integer, or a short label.
// Labels never contain commas or quotes, so CSV needs no escaping.
using Cell = std::variant<std::monostate, double, long long, std::string>;

class OutputTable {
 public:
  explicit OutputTable(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  void meta(const std::string& key, const std::string& value) {
    meta_.emplace_back(key, value);
  }
  void meta(const std::string& key, double value) {
    meta_.emplace_back(key, format_double(value));
  }
  void meta(const std::string& key, long long value) {
    meta_.emplace_back(key, std::to_string(value));
  }

  void row(std::vector<Cell> cells) { rows_.push_back(std::move(cells)); }

  std::size_t row_count() const { return rows_.size(); }

  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  void write_csv(std::ostream& os) const {
    for (const auto& [key, value] : meta_) os << "# " << key << ": " << value << "\n";
    for (std::size_t c = 0; c < columns_.size(); ++c)
      os << (c ? "," : "") << columns_[c];
    os << "\n";
    for (const auto& cells : rows_) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c) os << ",";
        if (std::holds_alternative<double>(cells[c]))
          os << format_double(std::get<double>(cells[c]));
        else if (std::holds_alternative<long long>(cells[c]))
          os << std::get<long long>(cells[c]);
        else if (std::holds_alternative<std::string>(cells[c]))
          os << std::get<std::string>(cells[c]);
        // monostate: empty field
      }
      os << "\n";
    }
  }

  void write_json(std::ostream& os) const {
    nlohmann::ordered_json doc;
    for (const auto& [key, value] : meta_) doc[key] = value;
    doc["columns"] = columns_;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& cells : rows_) {
      nlohmann::ordered_json rec;
      for (std::size_t c = 0; c < cells.size() && c < columns_.size(); ++c) {
        if (std::holds_alternative<double>(cells[c]))
          rec[columns_[c]] = std::get<double>(cells[c]);
        else if (std::holds_alternative<long long>(cells[c]))
          rec[columns_[c]] = std::get<long long>(cells[c]);
        else if (std::holds_alternative<std::string>(cells[c]))
          rec[columns_[c]] = std::get<std::string>(cells[c]);
        else
          rec[columns_[c]] = nullptr;
      }
      rows.push_back(std::move(rec));
    }
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << "\n";
  }

  void write(std::ostream& os, const std::string& format) const {
    if (format == "json")
      write_json(os);
    else
      write_csv(os);
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<Cell>> rows_;
};

}  // namespace ptlab
