#pragma once

// Evaluation reports: labelled tables written as CSV plus one JSON document
// holding the full structure. Output is byte-stable: JSON keys are sorted and
// numbers use the shortest round-trip representation.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpeval/error.hpp"
#include "fpeval/io/template_io.hpp"
#include "fpeval/summary.hpp"

namespace fpeval::io {

/// A grid with a label for every row and column. The first header cell names
/// the row-label column.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != header.size())
      throw InvalidArgument("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                            std::to_string(header.size()));
    rows.push_back(std::move(row));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["header"] = header;
    j["rows"] = rows;
    return j;
  }
};

/// Number formatting shared by CSV cells.
inline std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_double(v);
}

inline std::string cell(const std::optional<double>& v) { return v ? cell(*v) : ""; }

inline std::string cell(std::size_t v) { return std::to_string(v); }

/// JSON number or null for values that have no finite representation.
inline nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json number(const std::optional<double>& v) { return v ? number(*v) : nlohmann::json(); }

inline nlohmann::json to_json(const Summary& s) {
  nlohmann::json j;
  j["count"] = s.count;
  j["mean"] = s.count ? number(s.mean) : nlohmann::json();
  j["sd"] = s.count ? number(s.sd) : nlohmann::json();
  return j;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const Table& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

struct Report {
  std::string kind;
  nlohmann::json document = nlohmann::json::object();
  std::vector<Table> tables;
  bool external_failure_exceeded = false;

  /// Writes `<kind>_report.json` and one `<table>.csv` per table into `dir`.
  /// Returns the written paths in order.
  std::vector<std::filesystem::path> write(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& text) {
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      out << text;
      if (!out) throw DataError("cannot write '" + p.string() + "'");
      written.push_back(p);
    };
    nlohmann::json doc = document;
    doc["kind"] = kind;
    nlohmann::json tables_json = nlohmann::json::object();
    for (const auto& t : tables) {
      tables_json[t.name] = t.to_json();
      put(dir / (t.name + ".csv"), to_csv(t));
    }
    doc["tables"] = tables_json;
    put(dir / (kind + "_report.json"), doc.dump(2) + "\n");
    return written;
  }
};

}  // namespace fpeval::io
